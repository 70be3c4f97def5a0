//! Ground truth by enumerating the linear regions of a network.

use nnv_core::encoding::{encode_network, EncodingKind};
use nnv_core::geometry::GeometricSet;
use nnv_core::lp::{add_set_constraint, solve_lp, LinearModel, LpStatus, Relation, Sense, VarId, STRICT_MARGIN};
use nnv_core::{Activation, ActivationPattern, Error, Network, Result, Status, VerificationProblem};

/// Largest number of ReLU nodes the oracle accepts.
pub const NODE_BUDGET: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub status: Status,
    pub witness: Option<Vec<f64>>,
}

fn check_budget(net: &Network) -> Result<()> {
    if net.relu_count() > NODE_BUDGET {
        return Err(Error::ScaleLimit(format!("{} ReLU nodes, oracle budget is {NODE_BUDGET}", net.relu_count())));
    }
    Ok(())
}

/// Model of the region of `pattern` over the first `pattern.len()` layers, restricted to `input`.
fn region_model(
    net: &Network,
    input: &GeometricSet,
    pattern: &[Vec<bool>],
) -> Result<(LinearModel, Vec<VarId>, Vec<VarId>)> {
    let prefix = net.prefix(pattern.len())?;
    let d = ActivationPattern(pattern.to_vec());
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, &prefix, EncodingKind::StandardLP(&d))?;
    add_set_constraint(&mut m, input, vars.input())?;
    Ok((m, vars.input().to_vec(), vars.output().to_vec()))
}

/// Activation patterns whose region meets `input`; ties belong to both sides.
pub fn regions(net: &Network, input: &GeometricSet) -> Result<Vec<ActivationPattern>> {
    check_budget(net)?;
    let layers = net.layers();
    let mut stack: Vec<Vec<Vec<bool>>> = vec![Vec::new()];
    let mut out = Vec::new();
    while let Some(partial) = stack.pop() {
        let i = partial.len();
        if i == layers.len() {
            out.push(ActivationPattern(partial));
            continue;
        }
        let k = layers[i].output_dim();
        if layers[i].activation == Activation::Id {
            let mut next = partial;
            next.push(vec![true; k]);
            stack.push(next);
            continue;
        }
        for code in (0u32..1 << k).rev() {
            let mut next = partial.clone();
            next.push((0..k).map(|j| code >> j & 1 == 1).collect());
            let (m, _, _) = region_model(net, input, &next)?;
            if solve_lp(&m).status != LpStatus::Infeasible {
                stack.push(next);
            }
        }
    }
    Ok(out)
}

/// Closed pieces whose union is the complement of `y`.
fn complement_pieces(y: &GeometricSet) -> Result<Vec<Vec<(Vec<f64>, f64)>>> {
    Ok(match y {
        GeometricSet::PolytopeComplement(pc) => vec![pc.inner.rows()],
        s => s
            .constraint_rows()?
            .into_iter()
            .map(|(c, d)| vec![(c.iter().map(|v| -v).collect(), -(d + STRICT_MARGIN))])
            .collect(),
    })
}

/// Decides `p` exactly; a violating input is returned as the witness.
pub fn oracle_verify(p: &VerificationProblem) -> Result<OracleResult> {
    let pieces = complement_pieces(&p.output)?;
    for pattern in regions(&p.network, &p.input)? {
        for piece in &pieces {
            let (mut m, x, y) = region_model(&p.network, &p.input, &pattern.0)?;
            for (c, d) in piece {
                m.add_constraint(y.iter().copied().zip(c.iter().copied()).collect(), Relation::Le, *d)?;
            }
            let out = solve_lp(&m);
            if out.is_optimal() {
                let w = x.iter().map(|&v| out.point[v]).collect();
                return Ok(OracleResult { status: Status::Violated, witness: Some(w) });
            }
        }
    }
    Ok(OracleResult { status: Status::Holds, witness: None })
}

/// Exact range of the single output of `net` over `input`.
pub fn exact_range(net: &Network, input: &GeometricSet) -> Result<(f64, f64)> {
    if net.output_dim() != 1 {
        return Err(Error::Unsupported("exact range needs a single output".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for pattern in regions(net, input)? {
        for sense in [Sense::Minimize, Sense::Maximize] {
            let (mut m, _, y) = region_model(net, input, &pattern.0)?;
            m.set_objective(vec![(y[0], 1.0)], 0.0, sense)?;
            let out = solve_lp(&m);
            match out.status {
                LpStatus::Optimal if sense == Sense::Minimize => lo = lo.min(out.value),
                LpStatus::Optimal => hi = hi.max(out.value),
                LpStatus::Unbounded => return Err(Error::Unsupported("output is unbounded over the input set".into())),
                LpStatus::Infeasible => {}
            }
        }
    }
    if lo > hi {
        return Err(Error::EmptySet);
    }
    Ok((lo, hi))
}
