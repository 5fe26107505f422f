use alloc::vec::Vec;

use nalgebra::DVector;

use crate::model::ProblemInstance;
use crate::subsolver::{dual_value_term, linear_term};
use crate::{Error, Result};

/// Value, gradient and primal minimizers of the dual at one multiplier point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub primal: DVector<f64>,
}

/// Splits a stacked multiplier vector into per-agent blocks.
pub fn split_multipliers(instance: &ProblemInstance, lambda: &DVector<f64>) -> Vec<DVector<f64>> {
    (0..instance.len())
        .map(|i| instance.dual_block(lambda, i))
        .collect()
}

pub fn stack_multipliers(instance: &ProblemInstance, blocks: &[DVector<f64>]) -> DVector<f64> {
    let mut out = DVector::zeros(instance.dual_dim());
    for (i, b) in blocks.iter().enumerate() {
        out.rows_range_mut(instance.dual_range(i)).copy_from(b);
    }
    out
}

fn check_dual(instance: &ProblemInstance, lambda: &DVector<f64>) -> Result<()> {
    if lambda.len() != instance.dual_dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dual_dim(),
            got: lambda.len(),
        });
    }
    Ok(())
}

/// `q(λ) = Σ_i q_i(λ^i)`, `∇q(λ) = Gu(λ) − g` and `u(λ)`.
pub fn eval_dual(instance: &ProblemInstance, lambda: &DVector<f64>) -> Result<DualEvaluation> {
    check_dual(instance, lambda)?;
    let blocks = split_multipliers(instance, lambda);
    let mut value = 0.0;
    let mut primal_blocks = Vec::with_capacity(instance.len());
    for i in 0..instance.len() {
        let agent = instance.agent(i);
        let a = linear_term(instance, i, |j| &blocks[j]);
        let u = instance.solver(i).solve(agent, &a)?;
        value += dual_value_term(agent, &blocks[i], &a, &u);
        primal_blocks.push(u);
    }
    let mut gradient = DVector::zeros(instance.dual_dim());
    for i in 0..instance.len() {
        let r = instance.row_residual(i, |j| &primal_blocks[j]);
        gradient.rows_range_mut(instance.dual_range(i)).copy_from(&r);
    }
    let mut primal = DVector::zeros(instance.primal_dim());
    for (i, u) in primal_blocks.iter().enumerate() {
        primal.rows_range_mut(instance.primal_range(i)).copy_from(u);
    }
    Ok(DualEvaluation {
        value,
        gradient,
        primal,
    })
}

/// `λ^i = col{λ_j : j ∈ M_i}`, skipping agents without rows.
pub fn local_multipliers(instance: &ProblemInstance, i: usize, lambda: &DVector<f64>) -> DVector<f64> {
    let parts: Vec<DVector<f64>> = instance
        .out_neighbors(i)
        .iter()
        .map(|&j| instance.dual_block(lambda, j))
        .collect();
    DVector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().copied()),
    )
}

/// Gradient of the local dual `q_i` with respect to `λ^i`:
/// `G^i u_i(λ^i) − g̃^i`, where `g̃^i` carries `g_i` in agent `i`'s own slot.
pub fn local_gradient(instance: &ProblemInstance, i: usize, lambda: &DVector<f64>) -> Result<DVector<f64>> {
    check_dual(instance, lambda)?;
    let blocks = split_multipliers(instance, lambda);
    let agent = instance.agent(i);
    let a = linear_term(instance, i, |j| &blocks[j]);
    let u = instance.solver(i).solve(agent, &a)?;
    let mut parts: Vec<DVector<f64>> = Vec::new();
    for &j in instance.out_neighbors(i) {
        let owner = instance.agent(j);
        if owner.rows() == 0 {
            continue;
        }
        let mut part = &owner.blocks[&i] * &u;
        if j == i {
            part -= &owner.rhs;
        }
        parts.push(part);
    }
    Ok(DVector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().copied()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::instance_a;
    use alloc::vec;

    fn at(p: &ProblemInstance, l: f64) -> DualEvaluation {
        eval_dual(p, &DVector::from_vec(vec![l])).unwrap()
    }

    #[test]
    fn instance_a_dual() {
        let p = instance_a();
        let e = at(&p, 0.0);
        assert_eq!((e.value, e.gradient[0]), (0.0, -2.0));
        assert_eq!(e.primal.as_slice(), &[0.0, 0.0]);
        let e = at(&p, -1.0);
        assert_eq!((e.value, e.gradient[0]), (1.0, 0.0));
        assert_eq!(e.primal.as_slice(), &[1.0, 1.0]);
        let e = at(&p, 1.0);
        assert_eq!((e.value, e.gradient[0]), (-3.0, -4.0));
        // q(λ) = −λ² − 2λ on the interior of the boxes.
        for l in [-3.0, -0.25, 0.5, 2.0] {
            assert!((at(&p, l).value - (-l * l - 2.0 * l)).abs() < 1e-12);
        }
    }

    #[test]
    fn local_gradients_sum_to_global() {
        let p = instance_a();
        let lam = DVector::from_vec(vec![0.3]);
        let g0 = local_gradient(&p, 0, &lam).unwrap();
        let g1 = local_gradient(&p, 1, &lam).unwrap();
        let full = eval_dual(&p, &lam).unwrap().gradient;
        assert!((g0[0] + g1[0] - full[0]).abs() < 1e-12);
        assert_eq!(local_multipliers(&p, 1, &lam).len(), 1);
    }

    #[test]
    fn dimension_checked() {
        let p = instance_a();
        assert!(eval_dual(&p, &DVector::zeros(2)).is_err());
    }
}
