use crate::config::OodMode;
use crate::data::{LabeledExample, Pool, Target};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleResponse {
    Label(usize),
    /// Exposure mode: the OoD item is labeled with the uniform distribution.
    Uniform,
    /// Rejection mode: the OoD item is discarded.
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub pool_id: usize,
    pub response: OracleResponse,
    pub is_ood: bool,
    /// The example to add to the training set, if any.
    pub example: Option<LabeledExample>,
}

/// Reveal the candidates at `positions`, removing them from the pool.
pub fn query_oracle(
    pool: &mut Pool,
    positions: &[usize],
    mode: OodMode,
    classes: usize,
) -> Result<Vec<OracleOutcome>> {
    Ok(pool
        .take(positions)?
        .into_iter()
        .map(|(pool_id, example)| {
            let is_ood = example.is_ood;
            let (response, example) = match (is_ood, mode) {
                (true, OodMode::Rejection) => (OracleResponse::Rejected, None),
                (true, OodMode::Exposure) => (
                    OracleResponse::Uniform,
                    Some(LabeledExample {
                        x: example.x,
                        target: Target::uniform(classes),
                        is_ood: true,
                    }),
                ),
                (false, _) => {
                    let response = match &example.target {
                        Target::Hard(y) => OracleResponse::Label(*y),
                        Target::Soft(_) => OracleResponse::Uniform,
                    };
                    (response, Some(example))
                }
            };
            OracleOutcome {
                pool_id,
                response,
                is_ood,
                example,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> Pool {
        Pool::new(vec![
            LabeledExample::hard(vec![0.0], 1),
            LabeledExample {
                x: vec![9.0],
                target: Target::uniform(3),
                is_ood: true,
            },
            LabeledExample::hard(vec![1.0], 2),
        ])
    }

    #[test]
    fn rejection_drops_ood() {
        let mut p = pool();
        let out = query_oracle(&mut p, &[1, 0], OodMode::Rejection, 3).unwrap();
        assert_eq!(out[0].response, OracleResponse::Rejected);
        assert!(out[0].example.is_none() && out[0].is_ood);
        assert_eq!(out[1].response, OracleResponse::Label(1));
        assert_eq!(p.len(), 1);
        assert_eq!(p.ids(), &[2]);
    }

    #[test]
    fn exposure_gives_uniform_targets() {
        let mut p = pool();
        let out = query_oracle(&mut p, &[1], OodMode::Exposure, 3).unwrap();
        assert_eq!(out[0].response, OracleResponse::Uniform);
        assert_eq!(
            out[0].example.as_ref().unwrap().target.to_probs(3).unwrap(),
            vec![1.0 / 3.0; 3]
        );
    }
}
