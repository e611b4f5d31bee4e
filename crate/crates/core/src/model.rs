//! Layer-level model description and contiguous split schemes.
//!
//! A model is an ordered list of layer profiles. A split scheme cuts the layer
//! sequence at interior boundaries into contiguous segments; segment loads are
//! aggregated once here so the cost model and solvers never walk layers again.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-layer resource profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    /// Ordinal position in the model, 0-based and gap-free.
    pub index: usize,
    /// Work per request for this layer, in FLOPs.
    pub compute_flops: f64,
    /// Resident weight footprint in bytes.
    pub weight_bytes: u64,
    /// Size of the activation tensor this layer emits, in bits.
    pub activation_out_bits: f64,
    /// Layer must run on a trusted node (raw-input or output-adjacent layers).
    pub privacy_critical: bool,
}

/// An ordered stack of layers forming one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    layers: Vec<LayerProfile>,
}

impl ModelProfile {
    /// Builds a profile, checking that layer indices are 0..m contiguous and
    /// every per-layer quantity is non-negative (compute strictly positive).
    pub fn new(name: impl Into<String>, layers: Vec<LayerProfile>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("model.layers", "model must have at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.index != i {
                return Err(Error::config(
                    format!("model.layers[{i}].index"),
                    format!("expected {} but found {}", i, layer.index),
                ));
            }
            if layer.compute_flops <= 0.0 || !layer.compute_flops.is_finite() {
                return Err(Error::config(
                    format!("model.layers[{i}].compute_flops"),
                    "must be finite and > 0",
                ));
            }
            if layer.activation_out_bits < 0.0 || !layer.activation_out_bits.is_finite() {
                return Err(Error::config(
                    format!("model.layers[{i}].activation_out_bits"),
                    "must be finite and >= 0",
                ));
            }
        }
        Ok(ModelProfile {
            name: name.into(),
            layers,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerProfile] {
        &self.layers
    }

    pub fn total_compute_flops(&self) -> f64 {
        self.layers.iter().map(|l| l.compute_flops).sum()
    }

    pub fn total_weight_bytes(&self) -> u64 {
        self.layers.iter().map(|l| l.weight_bytes).sum()
    }
}

/// One contiguous run of layers `[layer_start, layer_end)` with aggregated loads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub index: usize,
    pub layer_start: usize,
    pub layer_end: usize,
    /// Sum of layer compute, in FLOPs per request.
    pub load_compute_flops: f64,
    /// Sum of layer weights, in bytes.
    pub load_mem_bytes: u64,
    /// Activation bits crossing the segment's trailing boundary.
    /// Zero for the last segment (the output leaves the placement problem).
    pub boundary_activation_bits: f64,
    /// True if any layer in the segment is privacy critical.
    pub privacy_critical: bool,
}

impl Segment {
    pub fn num_layers(&self) -> usize {
        self.layer_end - self.layer_start
    }
}

/// A full partition of the model into contiguous segments.
///
/// `boundaries` holds the strictly increasing interior cut points; segment `j`
/// covers layers `[b_{j-1}, b_j)` with implicit `b_{-1} = 0` and `b_k = m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitScheme {
    pub boundaries: Vec<usize>,
    pub segments: Vec<Segment>,
}

impl SplitScheme {
    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }
}

/// Cuts `profile` at the given interior boundaries.
///
/// Boundaries must be strictly increasing and lie in `1..m`. An empty list
/// yields the single-segment identity split.
pub fn make_split(profile: &ModelProfile, boundaries: &[usize]) -> Result<SplitScheme> {
    let m = profile.num_layers();
    let mut prev = 0usize;
    for (i, &b) in boundaries.iter().enumerate() {
        if b == 0 || b >= m {
            return Err(Error::InvalidBoundary(format!(
                "boundary {b} out of range 1..{m}"
            )));
        }
        if i > 0 && b <= prev {
            return Err(Error::InvalidBoundary(format!(
                "boundaries must be strictly increasing, found {prev} then {b}"
            )));
        }
        prev = b;
    }

    let mut segments = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0usize;
    for j in 0..=boundaries.len() {
        let end = if j < boundaries.len() { boundaries[j] } else { m };
        let layers = &profile.layers()[start..end];
        let crossing = if j < boundaries.len() {
            // The boundary activation is whatever the last layer before the cut emits.
            layers.last().expect("segment is non-empty").activation_out_bits
        } else {
            0.0
        };
        segments.push(Segment {
            index: j,
            layer_start: start,
            layer_end: end,
            load_compute_flops: layers.iter().map(|l| l.compute_flops).sum(),
            load_mem_bytes: layers.iter().map(|l| l.weight_bytes).sum(),
            boundary_activation_bits: crossing,
            privacy_critical: layers.iter().any(|l| l.privacy_critical),
        });
        start = end;
    }

    Ok(SplitScheme {
        boundaries: boundaries.to_vec(),
        segments,
    })
}

/// Enumerates every split of `profile` into at most `max_segments` segments.
///
/// Schemes are emitted in lexicographic order of their boundary lists, with
/// the identity split (empty boundary list) first. The count is
/// `sum_{k=1}^{K} C(m-1, k-1)`.
pub fn enumerate_splits(profile: &ModelProfile, max_segments: usize) -> Result<Vec<SplitScheme>> {
    let m = profile.num_layers();
    if max_segments == 0 || max_segments > m {
        return Err(Error::InvalidSegmentCount {
            requested: max_segments,
            layers: m,
        });
    }

    let mut out = Vec::new();
    let mut prefix: Vec<usize> = Vec::new();
    // Depth-first over boundary prefixes; pre-order emission is lexicographic.
    fn recurse(
        profile: &ModelProfile,
        m: usize,
        max_cuts: usize,
        next_min: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<SplitScheme>,
    ) -> Result<()> {
        out.push(make_split(profile, prefix)?);
        if prefix.len() < max_cuts {
            for cut in next_min..m {
                prefix.push(cut);
                recurse(profile, m, max_cuts, cut + 1, prefix, out)?;
                prefix.pop();
            }
        }
        Ok(())
    }
    recurse(profile, m, max_segments - 1, 1, &mut prefix, &mut out)?;
    Ok(out)
}

/// Splits segment `segment_index` of `scheme` at interior layer `cut`,
/// leaving all other segments untouched.
pub fn subdivide(
    profile: &ModelProfile,
    scheme: &SplitScheme,
    segment_index: usize,
    cut: usize,
) -> Result<SplitScheme> {
    let seg = scheme.segments.get(segment_index).ok_or_else(|| {
        Error::InvalidBoundary(format!(
            "segment {segment_index} out of range for a {}-segment scheme",
            scheme.num_segments()
        ))
    })?;
    if seg.num_layers() < 2 {
        return Err(Error::InvalidBoundary(format!(
            "segment {segment_index} has a single layer and cannot be subdivided"
        )));
    }
    if cut <= seg.layer_start || cut >= seg.layer_end {
        return Err(Error::InvalidBoundary(format!(
            "cut {cut} is not interior to segment {segment_index} ({}..{})",
            seg.layer_start, seg.layer_end
        )));
    }
    let mut boundaries = scheme.boundaries.clone();
    boundaries.insert(segment_index, cut);
    make_split(profile, &boundaries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_profile(m: usize) -> ModelProfile {
        let layers = (0..m)
            .map(|i| LayerProfile {
                index: i,
                compute_flops: 1e9,
                weight_bytes: 100,
                activation_out_bits: 8_000.0,
                privacy_critical: false,
            })
            .collect();
        ModelProfile::new("uniform", layers).unwrap()
    }

    #[test]
    fn make_split_three_segments() {
        let p = uniform_profile(4);
        let s = make_split(&p, &[1, 3]).unwrap();
        assert_eq!(s.num_segments(), 3);
        let ranges: Vec<(usize, usize)> = s
            .segments
            .iter()
            .map(|seg| (seg.layer_start, seg.layer_end))
            .collect();
        assert_eq!(ranges, vec![(0, 1), (1, 3), (3, 4)]);
        assert_eq!(s.segments[0].load_mem_bytes, 100);
        assert_eq!(s.segments[1].load_mem_bytes, 200);
        assert_eq!(s.segments[1].load_compute_flops, 2e9);
        assert_eq!(s.segments[0].boundary_activation_bits, 8_000.0);
        assert_eq!(s.segments[2].boundary_activation_bits, 0.0);
    }

    #[test]
    fn make_split_identity() {
        let p = uniform_profile(4);
        let s = make_split(&p, &[]).unwrap();
        assert_eq!(s.num_segments(), 1);
        assert_eq!(s.segments[0].layer_start, 0);
        assert_eq!(s.segments[0].layer_end, 4);
        assert_eq!(s.segments[0].load_compute_flops, 4e9);
        assert_eq!(s.segments[0].boundary_activation_bits, 0.0);
    }

    #[test]
    fn make_split_rejects_non_increasing() {
        let p = uniform_profile(4);
        assert!(matches!(
            make_split(&p, &[3, 1]),
            Err(Error::InvalidBoundary(_))
        ));
        assert!(matches!(
            make_split(&p, &[2, 2]),
            Err(Error::InvalidBoundary(_))
        ));
    }

    #[test]
    fn make_split_rejects_out_of_range() {
        let p = uniform_profile(4);
        assert!(make_split(&p, &[0]).is_err());
        assert!(make_split(&p, &[4]).is_err());
        assert!(make_split(&p, &[5]).is_err());
    }

    #[test]
    fn segment_privacy_flag_propagates() {
        let mut layers: Vec<LayerProfile> = (0..4)
            .map(|i| LayerProfile {
                index: i,
                compute_flops: 1e9,
                weight_bytes: 100,
                activation_out_bits: 8_000.0,
                privacy_critical: false,
            })
            .collect();
        layers[0].privacy_critical = true;
        let p = ModelProfile::new("edge-critical", layers).unwrap();
        let s = make_split(&p, &[2]).unwrap();
        assert!(s.segments[0].privacy_critical);
        assert!(!s.segments[1].privacy_critical);
    }

    #[test]
    fn enumerate_counts_match_binomials() {
        // sum_{k=1}^{K} C(m-1, k-1)
        let p = uniform_profile(4);
        assert_eq!(enumerate_splits(&p, 1).unwrap().len(), 1);
        assert_eq!(enumerate_splits(&p, 2).unwrap().len(), 4);
        assert_eq!(enumerate_splits(&p, 3).unwrap().len(), 7);
        assert_eq!(enumerate_splits(&p, 4).unwrap().len(), 8);
    }

    #[test]
    fn enumerate_is_lexicographic() {
        let p = uniform_profile(3);
        let got: Vec<Vec<usize>> = enumerate_splits(&p, 3)
            .unwrap()
            .into_iter()
            .map(|s| s.boundaries)
            .collect();
        assert_eq!(got, vec![vec![], vec![1], vec![1, 2], vec![2]]);
    }

    #[test]
    fn enumerate_rejects_bad_segment_count() {
        let p = uniform_profile(3);
        assert!(matches!(
            enumerate_splits(&p, 0),
            Err(Error::InvalidSegmentCount { .. })
        ));
        assert!(matches!(
            enumerate_splits(&p, 4),
            Err(Error::InvalidSegmentCount { .. })
        ));
    }

    #[test]
    fn enumerate_single_layer_model() {
        let p = uniform_profile(1);
        let all = enumerate_splits(&p, 1).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].boundaries.is_empty());
    }

    #[test]
    fn subdivide_inserts_boundary() {
        let p = uniform_profile(4);
        let s = make_split(&p, &[1, 3]).unwrap();
        let s2 = subdivide(&p, &s, 1, 2).unwrap();
        assert_eq!(s2.boundaries, vec![1, 2, 3]);
        // Other segments are unchanged.
        assert_eq!(s2.segments[0], s.segments[0]);
        assert_eq!(s2.segments[3].layer_start, 3);
    }

    #[test]
    fn subdivide_identity_split() {
        let p = uniform_profile(2);
        let s = make_split(&p, &[]).unwrap();
        let s2 = subdivide(&p, &s, 0, 1).unwrap();
        assert_eq!(s2.boundaries, vec![1]);
    }

    #[test]
    fn subdivide_rejects_single_layer_and_exterior_cuts() {
        let p = uniform_profile(4);
        let s = make_split(&p, &[1, 3]).unwrap();
        assert!(subdivide(&p, &s, 0, 1).is_err()); // single-layer segment
        assert!(subdivide(&p, &s, 1, 1).is_err()); // cut at segment start
        assert!(subdivide(&p, &s, 1, 3).is_err()); // cut at segment end
        assert!(subdivide(&p, &s, 9, 1).is_err()); // no such segment
    }

    #[test]
    fn model_profile_rejects_gapped_indices() {
        let layers = vec![
            LayerProfile {
                index: 0,
                compute_flops: 1e9,
                weight_bytes: 1,
                activation_out_bits: 1.0,
                privacy_critical: false,
            },
            LayerProfile {
                index: 2,
                compute_flops: 1e9,
                weight_bytes: 1,
                activation_out_bits: 1.0,
                privacy_critical: false,
            },
        ];
        assert!(ModelProfile::new("gapped", layers).is_err());
    }
}
