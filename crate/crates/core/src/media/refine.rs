//! Integer pixel refinement after recomposition.
//!
//! Rounding the inverse transform to 8-bit pixels perturbs every
//! coefficient slightly, and clamping to `0..=255` can remove a large part
//! of a change in saturated areas, so a carrier whose quantized value was
//! just set can land in another bin.
//!
//! Two phases repair this. Alternating projections first move every missed
//! carrier back to the centre of its bin through the synthesis atoms and
//! clamp the result to the pixel range. A greedy fixer then nudges single
//! pixels by one intensity level until every carrier re-quantizes to its
//! target, never pushing a carrier that is already in its bin out of it.

use super::quantize;

/// Linear map from pixels to carrier coefficients.
pub(crate) trait Footprint {
    fn carrier_count(&self) -> usize;

    /// `(pixel, d value / d pixel)` for every pixel influencing `carrier`.
    fn footprint(&self, carrier: usize, out: &mut Vec<(usize, f64)>);

    /// `(carrier, d value / d pixel)` for every carrier influenced by `pixel`.
    fn carriers_at(&self, pixel: usize, out: &mut Vec<(usize, f64)>);

    /// Carrier values of a full pixel field.
    fn measure(&self, pixels: &[f64]) -> Vec<f64>;

    /// Pixel field produced by the given carrier coefficient changes.
    fn synthesize(&self, deltas: &[f64], pixel_count: usize) -> Vec<f64> {
        let mut field = vec![0.0; pixel_count];
        let mut foot = Vec::new();
        for (c, &d) in deltas.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            foot.clear();
            self.footprint(c, &mut foot);
            for &(p, w) in &foot {
                field[p] += w * d;
            }
        }
        field
    }
}

// A fixed carrier must sit this far inside its bin, in units of the step.
const TARGET_MARGIN: f64 = 0.02;
const KEEP_MARGIN: f64 = 1e-9;
const MAX_MOVES_PER_CARRIER: usize = 400;
const PROJECTION_ROUNDS: usize = 30;

fn inside(v: f64, target: i32, step: f64, margin: f64) -> bool {
    (v - target as f64 * step).abs() <= step * (0.5 - margin)
}

/// Rounds `field` to pixels whose carriers quantize to `targets`; returns the
/// pixels and the number of carriers still missing their target.
pub(crate) fn refine(
    field: &[f64],
    fp: &impl Footprint,
    targets: &[i32],
    step: f64,
    max_passes: usize,
) -> (Vec<u8>, usize) {
    debug_assert_eq!(targets.len(), fp.carrier_count());
    let misses = |values: &[f64]| -> Vec<usize> {
        (0..targets.len())
            .filter(|&c| quantize(values[c], step) != targets[c])
            .collect()
    };
    let round = |f: &[f64]| -> Vec<f64> { f.iter().map(|&v| v.round().clamp(0.0, 255.0)).collect() };

    let mut f: Vec<f64> = field.iter().map(|&v| v.clamp(0.0, 255.0)).collect();
    for _ in 0..PROJECTION_ROUNDS {
        let values = fp.measure(&round(&f));
        let bad = misses(&values);
        if bad.is_empty() {
            break;
        }
        let mut deltas = vec![0.0; targets.len()];
        for &c in &bad {
            deltas[c] = targets[c] as f64 * step - values[c];
        }
        let correction = fp.synthesize(&deltas, f.len());
        for (v, d) in f.iter_mut().zip(correction) {
            *v = (*v + d).clamp(0.0, 255.0);
        }
    }

    let mut px = round(&f);
    let mut foot = Vec::new();
    let mut hits = Vec::new();
    for _ in 0..max_passes {
        let mut values = fp.measure(&px);
        let bad = misses(&values);
        if bad.is_empty() {
            break;
        }
        for &c in &bad {
            for _ in 0..MAX_MOVES_PER_CARRIER {
                let need = targets[c] as f64 * step - values[c];
                if inside(values[c], targets[c], step, TARGET_MARGIN) {
                    break;
                }
                foot.clear();
                fp.footprint(c, &mut foot);
                foot.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
                let mut moved = false;
                for &(p, w) in &foot {
                    let dir = if (w > 0.0) == (need > 0.0) { 1.0 } else { -1.0 };
                    let nv = px[p] + dir;
                    if !(0.0..=255.0).contains(&nv) || (need - w * dir).abs() >= need.abs() {
                        continue;
                    }
                    hits.clear();
                    fp.carriers_at(p, &mut hits);
                    let safe = hits.iter().all(|&(d, wd)| {
                        d == c
                            || !inside(values[d], targets[d], step, KEEP_MARGIN)
                            || inside(values[d] + wd * dir, targets[d], step, KEEP_MARGIN)
                    });
                    if !safe {
                        continue;
                    }
                    px[p] = nv;
                    for &(d, wd) in &hits {
                        values[d] += wd * dir;
                    }
                    moved = true;
                    break;
                }
                if !moved {
                    break;
                }
            }
        }
    }
    let left = misses(&fp.measure(&px)).len();
    (px.into_iter().map(|v| v as u8).collect(), left)
}
