use std::sync::OnceLock;

use nhbloch_core::edge::{find_edge_modes, mode_profile, mode_state, BoundaryCondition, EdgeOptions, Side};
use nhbloch_core::linalg::{vnorm, C64};
use nhbloch_core::media::{example3_nonhermitian, DEFAULT_L};
use nhbloch_core::spectra::{band_diagram, BandDiagram, Rect, SpectraOptions};
use nhbloch_core::topology::{sample_interior, winding_of_points};
use proptest::prelude::*;

fn diagram() -> &'static BandDiagram {
    static D: OnceLock<BandDiagram> = OnceLock::new();
    D.get_or_init(|| {
        let opts = SpectraOptions { k_samples: 128, ..Default::default() };
        band_diagram(&example3_nonhermitian(DEFAULT_L).unwrap(), &Rect::new(0.0, 2.0, -1.5, 0.5).unwrap(), 2, &opts).unwrap()
    })
}

fn interior(band: usize) -> &'static [C64] {
    static P: OnceLock<Vec<Vec<C64>>> = OnceLock::new();
    &P.get_or_init(|| (0..2).map(|b| sample_interior(&diagram().curves[b], &diagram().curves, 16, 1e-3, 11, b as u64)).collect())[band]
}

fn bc() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![Just(BoundaryCondition::OutgoingVacuum), Just(BoundaryCondition::Pec), Just(BoundaryCondition::Pmc)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mode_side_follows_winding(band in 0usize..2, j in 0usize..16, bc in bc()) {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let pts = interior(band);
        prop_assume!(!pts.is_empty());
        let w = pts[j % pts.len()];
        let wind = winding_of_points(&diagram().curves[band].loop_points(), w, 1e-7).unwrap().winding;
        let set = find_edge_modes(&cell, w, bc, &EdgeOptions::default()).unwrap();
        let side = if wind > 0 { Side::Right } else { Side::Left };
        prop_assert_eq!(set.modes[0].side, side);
        prop_assert_eq!(set.twice_index as i64, 2 * wind);
        prop_assert_eq!(set.modes.len(), 1);
    }

    #[test]
    fn boundary_condition_holds_at_the_surface(band in 0usize..2, j in 0usize..16, bc in bc()) {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let pts = interior(band);
        prop_assume!(!pts.is_empty());
        let m = &find_edge_modes(&cell, pts[j % pts.len()], bc, &EdgeOptions::default()).unwrap().modes[0];
        let p = mode_state(&cell, m, 0.0);
        let s = if m.side == Side::Right { 1.0 } else { -1.0 };
        let r = match bc {
            BoundaryCondition::OutgoingVacuum => vnorm(&[p.h[0] - s * p.e[1], p.h[1] + s * p.e[0]]),
            BoundaryCondition::Pec => vnorm(&p.e),
            BoundaryCondition::Pmc => vnorm(&p.h),
        };
        prop_assert!(r <= 1e-9 * p.norm(), "{r}");
    }
}

#[test]
fn profile_decays_into_the_crystal() {
    let cell = example3_nonhermitian(DEFAULT_L).unwrap();
    for band in 0..2 {
        let w = interior(band)[0];
        let m = &find_edge_modes(&cell, w, BoundaryCondition::OutgoingVacuum, &EdgeOptions::default()).unwrap().modes[0];
        let n_far = 4 * m.asymptotic_start(1e-3).max(50);
        let prof = mode_profile(&cell, m, n_far as f64, 1);
        assert!(prof.last().unwrap().1.norm() < 0.5 * prof[0].1.norm());
        for (z, _) in &prof {
            assert!(if m.side == Side::Right { *z >= 0.0 } else { *z <= 0.0 });
        }
    }
}
