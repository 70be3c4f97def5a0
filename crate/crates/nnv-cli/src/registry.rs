//! Solver names, parameters and the input/output sets each one accepts.

use std::collections::BTreeMap;

use nnv_core::geometry::{is_bounded, SetKind};
use nnv_core::{Result, VerificationProblem, VerificationResult};
use nnv_solvers::{
    solve_ai2, solve_bab, solve_convdual, solve_dlv, solve_duality, solve_exactreach, solve_fastlin, solve_fastlip,
    solve_ilp, solve_maxsens, solve_mipverify, solve_nsverify, solve_planet, solve_reluplex, solve_reluval,
    solve_sherlock, BabConfig, DlvConfig, ExactReachConfig, FastLinConfig, IlpConfig, MaxSensConfig, NsVerifyConfig,
    ReluValConfig, SherlockConfig, TreeSearch,
};

use crate::error::CliError;

pub type Params = BTreeMap<String, f64>;

/// Extra requirement on a problem beyond its set kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Requirement {
    /// The output polytope must be bounded.
    BoundedOutput,
    /// Every input radius must be equal.
    UniformRadius,
    /// The network has one output.
    SingleOutput,
}

pub struct SolverEntry {
    pub name: &'static str,
    pub inputs: &'static [SetKind],
    pub outputs: &'static [SetKind],
    pub requires: &'static [Requirement],
    pub params: &'static [&'static str],
    pub complete: bool,
    run: fn(&VerificationProblem, &Params) -> Result<VerificationResult>,
}

use SetKind::{HPolytope as HP, Halfspace as HS, Hyperrectangle as HR, PolytopeComplement as PC};

fn get(p: &Params, k: &str) -> Option<f64> {
    p.get(k).copied()
}

fn count(p: &Params, k: &str, default: usize) -> usize {
    get(p, k).map_or(default, |v| v.max(0.0) as usize)
}

fn flag(p: &Params, k: &str, default: bool) -> bool {
    get(p, k).map_or(default, |v| v != 0.0)
}

fn fastlin_cfg(p: &Params) -> FastLinConfig {
    let d = FastLinConfig::default();
    FastLinConfig {
        max_iter: count(p, "max_iter", d.max_iter),
        eps0: get(p, "epsilon0").or(d.eps0),
        accuracy: get(p, "accuracy").unwrap_or(d.accuracy),
    }
}

pub static SOLVERS: &[SolverEntry] = &[
    SolverEntry {
        name: "exactreach",
        inputs: &[HP, HR],
        outputs: &[HP, HR],
        requires: &[Requirement::BoundedOutput],
        params: &["max_width"],
        complete: true,
        run: |p, k| {
            solve_exactreach(
                p,
                ExactReachConfig { max_width: count(k, "max_width", ExactReachConfig::default().max_width) },
            )
        },
    },
    SolverEntry {
        name: "ai2",
        inputs: &[HP, HR],
        outputs: &[HP, HR],
        requires: &[Requirement::BoundedOutput],
        params: &[],
        complete: false,
        run: |p, _| solve_ai2(p),
    },
    SolverEntry {
        name: "maxsens",
        inputs: &[HP, HR],
        outputs: &[HP, HR],
        requires: &[Requirement::BoundedOutput],
        params: &["resolution", "tight"],
        complete: false,
        run: |p, k| {
            let d = MaxSensConfig::default();
            solve_maxsens(
                p,
                MaxSensConfig {
                    resolution: get(k, "resolution").unwrap_or(d.resolution),
                    tight: flag(k, "tight", d.tight),
                },
            )
        },
    },
    SolverEntry {
        name: "nsverify",
        inputs: &[HR],
        outputs: &[PC, HS],
        requires: &[],
        params: &["m"],
        complete: true,
        run: |p, k| solve_nsverify(p, NsVerifyConfig { m: get(k, "m") }),
    },
    SolverEntry {
        name: "mipverify",
        inputs: &[HR],
        outputs: &[PC, HS],
        requires: &[Requirement::UniformRadius],
        params: &[],
        complete: true,
        run: |p, _| solve_mipverify(p),
    },
    SolverEntry {
        name: "ilp",
        inputs: &[HR],
        outputs: &[PC, HS],
        requires: &[],
        params: &["iterative"],
        complete: false,
        run: |p, k| solve_ilp(p, IlpConfig { iterative: flag(k, "iterative", IlpConfig::default().iterative) }),
    },
    SolverEntry {
        name: "duality",
        inputs: &[HR],
        outputs: &[HS],
        requires: &[Requirement::UniformRadius],
        params: &[],
        complete: false,
        run: |p, _| solve_duality(p),
    },
    SolverEntry {
        name: "convdual",
        inputs: &[HR],
        outputs: &[HS],
        requires: &[Requirement::UniformRadius],
        params: &[],
        complete: false,
        run: |p, _| solve_convdual(p),
    },
    SolverEntry {
        name: "fastlin",
        inputs: &[HR],
        outputs: &[HS],
        requires: &[],
        params: &["max_iter", "accuracy", "epsilon0"],
        complete: false,
        run: |p, k| solve_fastlin(p, fastlin_cfg(k)),
    },
    SolverEntry {
        name: "fastlip",
        inputs: &[HR],
        outputs: &[HS],
        requires: &[],
        params: &["max_iter", "accuracy", "epsilon0"],
        complete: false,
        run: |p, k| solve_fastlip(p, fastlin_cfg(k)),
    },
    SolverEntry {
        name: "reluval",
        inputs: &[HR],
        outputs: &[HR],
        requires: &[],
        params: &["max_iter", "bfs"],
        complete: true,
        run: |p, k| {
            let d = ReluValConfig::default();
            let tree_search = if flag(k, "bfs", false) { TreeSearch::Bfs } else { d.tree_search };
            solve_reluval(p, ReluValConfig { tree_search, max_iter: count(k, "max_iter", d.max_iter) })
        },
    },
    SolverEntry {
        name: "dlv",
        inputs: &[HR],
        outputs: &[HR],
        requires: &[Requirement::SingleOutput],
        params: &["epsilon", "gamma"],
        complete: false,
        run: |p, k| {
            let d = DlvConfig::default();
            solve_dlv(
                p,
                DlvConfig { epsilon: get(k, "epsilon").or(d.epsilon), gamma: get(k, "gamma").unwrap_or(d.gamma) },
            )
        },
    },
    SolverEntry {
        name: "sherlock",
        inputs: &[HR],
        outputs: &[HR],
        requires: &[Requirement::SingleOutput],
        params: &["epsilon"],
        complete: false,
        run: |p, k| {
            solve_sherlock(
                p,
                SherlockConfig { epsilon: get(k, "epsilon").unwrap_or(SherlockConfig::default().epsilon) },
            )
        },
    },
    SolverEntry {
        name: "bab",
        inputs: &[HR],
        outputs: &[HR],
        requires: &[Requirement::SingleOutput],
        params: &["epsilon", "max_iter"],
        complete: false,
        run: |p, k| {
            let d = BabConfig::default();
            solve_bab(
                p,
                BabConfig {
                    epsilon: get(k, "epsilon").unwrap_or(d.epsilon),
                    max_iter: count(k, "max_iter", d.max_iter),
                },
            )
        },
    },
    SolverEntry {
        name: "planet",
        inputs: &[HR],
        outputs: &[PC, HS],
        requires: &[],
        params: &[],
        complete: true,
        run: |p, _| solve_planet(p),
    },
    SolverEntry {
        name: "reluplex",
        inputs: &[HR],
        outputs: &[PC, HS],
        requires: &[],
        params: &[],
        complete: true,
        run: |p, _| solve_reluplex(p),
    },
];

pub fn lookup(name: &str) -> std::result::Result<&'static SolverEntry, CliError> {
    SOLVERS.iter().find(|s| s.name == name).ok_or_else(|| CliError::UnknownSolver(name.to_string()))
}

fn kinds(ks: &[SetKind]) -> String {
    ks.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
}

impl SolverEntry {
    /// Rejects problems and parameters outside this solver's contract.
    pub fn check(&self, p: &VerificationProblem, params: &Params) -> std::result::Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Contract { solver: self.name.to_string(), msg });
        if let Some(k) = params.keys().find(|k| !self.params.contains(&k.as_str())) {
            return Err(CliError::Param(format!("solver {} has no parameter {k:?}", self.name)));
        }
        if !self.inputs.contains(&p.input.kind()) {
            return fail(format!("input must be one of [{}], got {}", kinds(self.inputs), p.input.kind().name()));
        }
        if !self.outputs.contains(&p.output.kind()) {
            return fail(format!("output must be one of [{}], got {}", kinds(self.outputs), p.output.kind().name()));
        }
        for r in self.requires {
            match r {
                Requirement::BoundedOutput if !is_bounded(&p.output)? => {
                    return fail("output set must be bounded".into())
                }
                Requirement::UniformRadius => {
                    let h = p.input.as_hyperrectangle().expect("checked above");
                    let r = h.max_radius();
                    if h.radius.iter().any(|&x| (x - r).abs() > 1e-12 * (1.0 + r)) {
                        return fail("input box must have a uniform radius".into());
                    }
                }
                Requirement::SingleOutput if p.network.output_dim() != 1 => {
                    return fail("network must have a single output".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn run(&self, p: &VerificationProblem, params: &Params) -> Result<VerificationResult> {
        (self.run)(p, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nnv_core::{Activation, GeometricSet, Halfspace, Hyperrectangle, Layer, Network};

    fn abs_problem(y: GeometricSet) -> VerificationProblem {
        let net = Network::new(vec![
            Layer::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, 0.0], Activation::ReLU).unwrap(),
            Layer::from_rows(&[vec![1.0, 1.0]], vec![0.0], Activation::Id).unwrap(),
        ])
        .unwrap();
        VerificationProblem::new(net, Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap().into(), y).unwrap()
    }

    #[test]
    fn names_are_unique() {
        for (i, s) in SOLVERS.iter().enumerate() {
            assert!(SOLVERS[i + 1..].iter().all(|t| t.name != s.name));
        }
        assert_eq!(SOLVERS.len(), 16);
        assert!(lookup("certify").is_err());
    }

    #[test]
    fn contracts() {
        let hs = abs_problem(Halfspace::new(vec![1.0], 0.5).unwrap().into());
        let none = Params::new();
        assert!(lookup("nsverify").unwrap().check(&hs, &none).is_ok());
        assert!(matches!(lookup("reluval").unwrap().check(&hs, &none), Err(CliError::Contract { .. })));
        assert!(matches!(lookup("exactreach").unwrap().check(&hs, &none), Err(CliError::Contract { .. })));
        let bad = Params::from([("gamma".to_string(), 0.5)]);
        assert!(matches!(lookup("nsverify").unwrap().check(&hs, &bad), Err(CliError::Param(_))));
        let r = lookup("nsverify").unwrap().run(&hs, &none).unwrap();
        assert_eq!(r.status, nnv_core::Status::Violated);
    }
}
