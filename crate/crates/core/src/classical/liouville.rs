use super::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::params::GridSpec;
use crate::phase_space::{GridKind, PhaseSpaceGrid};

/// Whether particles outside the momentum window are allowed. Either way
/// they are counted in the grid's overflow tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clipping {
    #[default]
    Reject,
    Allow,
}

/// Normalized 2-D histogram of `(wrapped x, p)`.
pub fn liouville_grid(e: &Ensemble, spec: GridSpec, clipping: Clipping) -> Result<PhaseSpaceGrid> {
    spec.validate()?;
    if e.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut grid = PhaseSpaceGrid::zeros(spec, GridKind::Liouville);
    let mut counts = vec![0u64; spec.cells()];
    let mut overflow = 0usize;
    for s in &e.states {
        match spec.p_index(s.p) {
            Some(pj) => counts[pj * spec.x_bins + spec.x_index(s.wrapped_x())] += 1,
            None => overflow += 1,
        }
    }
    let inside = e.len() - overflow;
    if inside == 0 {
        return Err(Error::AllOutOfRange(e.len()));
    }
    if overflow > 0 && clipping == Clipping::Reject {
        return Err(Error::Config(format!(
            "{overflow} of {} particles lie outside p in [{}, {}]; widen the grid or allow clipping",
            e.len(),
            spec.p_min,
            spec.p_max
        )));
    }
    let norm = inside as f64;
    for (v, c) in grid.values.iter_mut().zip(&counts) {
        *v = *c as f64 / norm;
    }
    grid.meta.overflow = overflow;
    grid.meta.sum_before_normalization = norm;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::ClassicalState;
    use crate::rng::StreamFactory;

    #[test]
    fn delta_ensemble_fills_one_cell() {
        let e = Ensemble::new(vec![ClassicalState::new(1.0, 0.5); 100]);
        let g = liouville_grid(&e, GridSpec::symmetric(16, 2.0), Clipping::Reject).unwrap();
        assert_eq!(g.occupied_cells(0.0), 1);
        assert_eq!(g.values.iter().cloned().fold(0.0, f64::max), 1.0);
        assert_eq!(g.meta.overflow, 0);
    }

    #[test]
    fn uniform_ensemble_is_flat() {
        let spec = GridSpec::new(8, 8, -std::f64::consts::PI, std::f64::consts::PI);
        let cells = spec.cells() as f64;
        let dev = |n| {
            let e = Ensemble::uniform(n, &StreamFactory::new(2));
            let g = liouville_grid(&e, spec, Clipping::Reject).unwrap();
            assert!((g.total() - 1.0).abs() < 1e-12);
            g.values.iter().map(|v| (v - 1.0 / cells).abs()).fold(0.0, f64::max)
        };
        let (small, large) = (dev(4_000), dev(256_000));
        // max deviation shrinks roughly as 1/sqrt(size): 8x more samples per side
        assert!(large < small / 4.0, "{small} -> {large}");
        assert!(large < 3e-3);
    }

    #[test]
    fn overflow_is_tallied_not_dropped() {
        let mut states = vec![ClassicalState::new(0.1, 0.0); 9];
        states.push(ClassicalState::new(0.1, 50.0));
        let e = Ensemble::new(states);
        let spec = GridSpec::symmetric(4, 1.0);
        assert!(liouville_grid(&e, spec, Clipping::Reject).is_err());
        let g = liouville_grid(&e, spec, Clipping::Allow).unwrap();
        assert_eq!(g.meta.overflow, 1);
        assert!((g.total() - 1.0).abs() < 1e-15);
        assert_eq!(g.meta.sum_before_normalization as usize + g.meta.overflow, e.len());
    }

    #[test]
    fn all_out_of_range_is_an_error() {
        let e = Ensemble::new(vec![ClassicalState::new(0.1, 9.0); 3]);
        let r = liouville_grid(&e, GridSpec::symmetric(4, 1.0), Clipping::Allow);
        assert!(matches!(r, Err(Error::AllOutOfRange(3))));
    }
}
