//! Inputs shared by the benchmarks.

use lava_core::synthetic::{generate_synthetic_activations, SynthSpec};
use lava_core::{ActivationDataset, VesselMap};

/// Default-shaped synthetic dataset with wider layers.
pub fn activations(layer_width: usize, seed: u64) -> ActivationDataset {
    let spec = SynthSpec {
        layer_width,
        seed,
        ..SynthSpec::default()
    };
    generate_synthetic_activations(&spec)
        .expect("valid spec")
        .dataset
}

/// A branching tree of one-pixel lines, loosely vessel-like.
pub fn vessel_tree(side: usize) -> VesselMap {
    let mut map = VesselMap::new(side, side).expect("nonzero side");
    let mut stack = vec![(
        side as f64 / 2.0,
        side as f64 - 1.0,
        -std::f64::consts::FRAC_PI_2,
        side as f64 / 3.0,
        0u32,
    )];
    while let Some((x, y, angle, len, depth)) = stack.pop() {
        let steps = len.ceil() as usize;
        let (dx, dy) = (angle.cos(), angle.sin());
        for t in 0..=steps {
            let (px, py) = (x + dx * t as f64, y + dy * t as f64);
            if px >= 0.0 && py >= 0.0 && (px as usize) < side && (py as usize) < side {
                map.set(px as usize, py as usize, true);
            }
        }
        if depth < 9 {
            let (ex, ey) = (x + dx * len, y + dy * len);
            stack.push((ex, ey, angle - 0.45, len * 0.7, depth + 1));
            stack.push((ex, ey, angle + 0.4, len * 0.7, depth + 1));
        }
    }
    map
}
