//! Versioned text checkpoints for the policy and value networks: a small
//! header plus named flat tensors, round-trippable bit-exactly.

use std::path::Path;

use thiserror::Error;

use crate::nn::{GaussianHead, Mlp};
use crate::rlcore::PolicyNet;

#[derive(Debug, Error)]
pub enum CkptError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported checkpoint version {0}")]
    Version(String),
    #[error("missing field '{0}'")]
    Missing(&'static str),
    #[error("tensor '{name}' has {got} values, expected {expected}")]
    Shape {
        name: String,
        expected: usize,
        got: usize,
    },
}

const MAGIC: &str = "stbound-checkpoint";
const VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub policy_sizes: Vec<usize>,
    pub policy_params: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value_sizes: Vec<usize>,
    pub value_params: Vec<f64>,
    pub action_channels: Vec<String>,
}

impl Checkpoint {
    pub fn from_nets(policy: &PolicyNet, value_net: &Mlp, action_channels: &[String]) -> Self {
        Checkpoint {
            policy_sizes: mlp_sizes(&policy.fbc),
            policy_params: policy.fbc.flatten(),
            log_std: policy.head.log_std.clone(),
            value_sizes: mlp_sizes(value_net),
            value_params: value_net.flatten(),
            action_channels: action_channels.to_vec(),
        }
    }

    /// Rebuild the nets; `action_indices` must be resolved by the caller
    /// against the reference the policy will run with.
    pub fn to_nets(&self, action_indices: Vec<usize>) -> Result<(PolicyNet, Mlp), CkptError> {
        let fbc = build_mlp(&self.policy_sizes, &self.policy_params, "policy")?;
        let value = build_mlp(&self.value_sizes, &self.value_params, "value")?;
        let head = GaussianHead {
            log_std: self.log_std.clone(),
        };
        Ok((PolicyNet::new(fbc, head, action_indices), value))
    }

    pub fn emit(&self) -> String {
        let mut s = format!("{MAGIC} {VERSION}\n");
        s.push_str(&format!("action_channels {}\n", self.action_channels.join(",")));
        s.push_str(&format!("policy.sizes {}\n", join_usize(&self.policy_sizes)));
        s.push_str(&format!("policy.params {}\n", join_f64(&self.policy_params)));
        s.push_str(&format!("policy.log_std {}\n", join_f64(&self.log_std)));
        s.push_str(&format!("value.sizes {}\n", join_usize(&self.value_sizes)));
        s.push_str(&format!("value.params {}\n", join_f64(&self.value_params)));
        s
    }

    pub fn parse(text: &str) -> Result<Checkpoint, CkptError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(CkptError::Missing("header"))?;
        let mut hp = header.split_whitespace();
        if hp.next() != Some(MAGIC) {
            return Err(CkptError::Parse {
                line: 1,
                msg: "not a checkpoint file".into(),
            });
        }
        let ver = hp.next().unwrap_or("");
        if ver != VERSION {
            return Err(CkptError::Version(ver.into()));
        }
        let mut policy_sizes = None;
        let mut policy_params = None;
        let mut log_std = None;
        let mut value_sizes = None;
        let mut value_params = None;
        let mut action_channels = None;
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(' ').ok_or(CkptError::Parse {
                line: i + 1,
                msg: "expected 'key values...'".into(),
            })?;
            match key {
                "action_channels" => {
                    action_channels =
                        Some(rest.split(',').map(|s| s.trim().to_string()).collect())
                }
                "policy.sizes" => policy_sizes = Some(parse_usizes(rest, i + 1)?),
                "policy.params" => policy_params = Some(parse_f64s(rest, i + 1)?),
                "policy.log_std" => log_std = Some(parse_f64s(rest, i + 1)?),
                "value.sizes" => value_sizes = Some(parse_usizes(rest, i + 1)?),
                "value.params" => value_params = Some(parse_f64s(rest, i + 1)?),
                other => {
                    return Err(CkptError::Parse {
                        line: i + 1,
                        msg: format!("unknown field '{other}'"),
                    })
                }
            }
        }
        Ok(Checkpoint {
            policy_sizes: policy_sizes.ok_or(CkptError::Missing("policy.sizes"))?,
            policy_params: policy_params.ok_or(CkptError::Missing("policy.params"))?,
            log_std: log_std.ok_or(CkptError::Missing("policy.log_std"))?,
            value_sizes: value_sizes.ok_or(CkptError::Missing("value.sizes"))?,
            value_params: value_params.ok_or(CkptError::Missing("value.params"))?,
            action_channels: action_channels.ok_or(CkptError::Missing("action_channels"))?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CkptError> {
        std::fs::write(path, self.emit())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CkptError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn mlp_sizes(net: &Mlp) -> Vec<usize> {
    let mut sizes = vec![net.input_dim()];
    sizes.extend(net.layers.iter().map(|l| l.rows));
    sizes
}

fn build_mlp(sizes: &[usize], params: &[f64], name: &str) -> Result<Mlp, CkptError> {
    let mut net = Mlp::zeros(sizes).map_err(|_| CkptError::Parse {
        line: 0,
        msg: format!("{name}.sizes needs at least two entries"),
    })?;
    if net.param_count() != params.len() {
        return Err(CkptError::Shape {
            name: format!("{name}.params"),
            expected: net.param_count(),
            got: params.len(),
        });
    }
    net.set_from_flat(params);
    Ok(net)
}

fn join_f64(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_f64s(s: &str, line: usize) -> Result<Vec<f64>, CkptError> {
    s.split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| CkptError::Parse {
                line,
                msg: format!("bad number '{t}'"),
            })
        })
        .collect()
}

fn parse_usizes(s: &str, line: usize) -> Result<Vec<usize>, CkptError> {
    s.split(',')
        .map(|t| {
            t.trim().parse().map_err(|_| CkptError::Parse {
                line,
                msg: format!("bad size '{t}'"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_ckpt() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fbc = Mlp::init(&[3, 8, 1], &mut rng, 0.01).unwrap();
        let value = Mlp::init(&[3, 8, 1], &mut rng, 1.0).unwrap();
        let policy = PolicyNet::new(fbc, GaussianHead::new(1, 0.3), vec![2]);
        Checkpoint::from_nets(&policy, &value, &["a".into()])
    }

    #[test]
    fn round_trip_bit_exact() {
        let ck = sample_ckpt();
        let again = Checkpoint::parse(&ck.emit()).unwrap();
        assert_eq!(ck, again);
    }

    #[test]
    fn nets_survive_round_trip() {
        let ck = sample_ckpt();
        let (policy, value) = ck.to_nets(vec![2]).unwrap();
        let input = [0.1, -0.4, 0.9];
        let again = Checkpoint::parse(&ck.emit()).unwrap();
        let (p2, v2) = again.to_nets(vec![2]).unwrap();
        assert_eq!(policy.fbc.forward(&input).unwrap(), p2.fbc.forward(&input).unwrap());
        assert_eq!(value.forward(&input).unwrap(), v2.forward(&input).unwrap());
        assert_eq!(policy.head.log_std, p2.head.log_std);
    }

    #[test]
    fn wrong_magic_and_version_rejected() {
        assert!(Checkpoint::parse("garbage 1\n").is_err());
        let ck = sample_ckpt();
        let bumped = ck.emit().replacen("checkpoint 1", "checkpoint 9", 1);
        assert!(matches!(
            Checkpoint::parse(&bumped),
            Err(CkptError::Version(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut ck = sample_ckpt();
        ck.policy_params.pop();
        assert!(matches!(
            Checkpoint::parse(&ck.emit()).unwrap().to_nets(vec![2]),
            Err(CkptError::Shape { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.txt");
        let ck = sample_ckpt();
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }
}
