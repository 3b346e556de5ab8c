//! Search for a finite model that tells two closed terms apart.
//!
//! If some algebra satisfies the equations and evaluates `t` and `u`
//! differently, the unique homomorphism out of the QW-type shows their
//! classes are distinct.

use serde::Serialize;

use crate::algebra::{eval_closed, table_len, FiniteAlgebra, OpTable};
use crate::equations::{sat_check, EquationSystem, DEFAULT_ENV_BUDGET};
use crate::terms::{Signature, Term};

use super::EngineError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome")]
pub enum Separation {
    Found { algebra: FiniteAlgebra },
    NotFound { searched: usize },
    BudgetExceeded { searched: usize },
}

/// Tries every algebra with carrier size `1..=carrier_bound` in a fixed
/// order, visiting at most `budget` of them.
pub fn find_separator<V: std::fmt::Debug>(
    sig: &Signature,
    eqs: &EquationSystem,
    t: &Term<V>,
    u: &Term<V>,
    carrier_bound: usize,
    budget: usize,
) -> Result<Separation, EngineError> {
    sig.check_term(t)?;
    sig.check_term(u)?;
    let mut searched = 0usize;
    for m in 1..=carrier_bound {
        let widths: Vec<usize> = sig
            .ops()
            .iter()
            .map(|o| o.arity.probe_width(eqs.probe))
            .collect();
        let lens: Option<Vec<usize>> = widths.iter().map(|&w| table_len(m, w)).collect();
        let Some(lens) = lens else {
            return Ok(Separation::BudgetExceeded { searched });
        };
        let entries: usize = lens.iter().sum();
        let mut alg = FiniteAlgebra {
            carrier: (0..m).map(|i| i.to_string()).collect(),
            probe: eqs.probe,
            ops: sig
                .ops()
                .iter()
                .zip(&lens)
                .map(|(o, &len)| OpTable {
                    name: o.name.clone(),
                    arity: o.arity,
                    table: vec![0; len],
                })
                .collect(),
        };
        let mut digits = vec![0usize; entries];
        loop {
            if searched >= budget {
                return Ok(Separation::BudgetExceeded { searched });
            }
            searched += 1;
            let mut k = 0;
            for op in alg.ops.iter_mut() {
                let len = op.table.len();
                op.table.copy_from_slice(&digits[k..k + len]);
                k += len;
            }
            if eval_closed(t, &alg)? != eval_closed(u, &alg)?
                && sat_check(&alg, eqs, DEFAULT_ENV_BUDGET)
                    .map_err(EngineError::from)?
                    .is_satisfied()
            {
                return Ok(Separation::Found { algebra: alg });
            }
            if !advance(&mut digits, m) {
                break;
            }
        }
    }
    Ok(Separation::NotFound { searched })
}

/// Odometer step with the last digit least significant.
fn advance(digits: &mut [usize], m: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < m {
            return true;
        }
        *d = 0;
    }
    false
}
