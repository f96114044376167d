//! Perceptually uniform color ramp for the heatmaps.

/// Anchor colors sampled uniformly on [0, 1], viridis-like: dark purple
/// through teal to bright yellow.
const ANCHORS: [[u8; 3]; 11] = [
    [68, 1, 84],
    [72, 36, 117],
    [65, 68, 135],
    [53, 95, 141],
    [42, 120, 142],
    [33, 145, 140],
    [34, 168, 132],
    [68, 191, 112],
    [122, 209, 81],
    [189, 223, 38],
    [253, 231, 37],
];

/// Map a value in [0, 1] to an RGB pixel by linear interpolation between
/// the anchors. Values outside the range are clamped.
pub fn ramp(value: f64) -> [u8; 3] {
    let v = value.clamp(0.0, 1.0);
    let pos = v * (ANCHORS.len() - 1) as f64;
    let lo = pos.floor() as usize;
    if lo >= ANCHORS.len() - 1 {
        return ANCHORS[ANCHORS.len() - 1];
    }
    let frac = pos - lo as f64;
    let a = ANCHORS[lo];
    let b = ANCHORS[lo + 1];
    std::array::from_fn(|i| (a[i] as f64 + frac * (b[i] as f64 - a[i] as f64)).round() as u8)
}
