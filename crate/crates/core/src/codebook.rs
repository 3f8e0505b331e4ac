//! Beam-steering codebooks and beam selection.
//!
//! A codebook is an ordered set of unit-norm beamforming vectors, each a
//! normalized steering vector toward a pointing angle. Beam quality for a
//! channel `h` is the received power `|f^H h|^2`; the optimal beam is the
//! lowest-index maximizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;
use crate::raytrace::{steering_vector, ChannelVector};

/// How a codebook's pointing angles were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    /// Centers of equal angular bins across a field of view.
    UniformFov,
    /// Caller-supplied angle list.
    AngleList,
    /// DFT beams, mutually orthogonal at half-wavelength spacing.
    DftOrthogonal,
}

/// Ordered set of unit-norm beamforming vectors with their pointing angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub vectors: Vec<ChannelVector>,
    /// Pointing angle of each beam, radians off boresight.
    pub angles: Vec<f64>,
    pub kind: CodebookKind,
}

impl Codebook {
    pub fn num_beams(&self) -> usize {
        self.vectors.len()
    }

    pub fn num_elements(&self) -> usize {
        self.vectors.first().map_or(0, ChannelVector::len)
    }

    /// Serializes kind, angles (in degrees), and element count. Vectors are
    /// rebuilt on load, so files stay small and stay in sync with the
    /// construction rule.
    pub fn to_json(&self) -> Result<String> {
        let file = CodebookFile {
            kind: self.kind,
            angles_deg: self.angles.iter().map(|a| a.to_degrees()).collect(),
            num_elements: self.num_elements(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Rebuilds a codebook saved by [`Codebook::to_json`] against `array`,
    /// cross-checking the element count.
    pub fn from_json(text: &str, array: &ArrayConfig) -> Result<Self> {
        let file: CodebookFile = serde_json::from_str(text)?;
        if file.num_elements != array.num_elements {
            return Err(Error::dimension_mismatch(
                "codebook element count vs array",
                array.num_elements,
                file.num_elements,
            ));
        }
        if file.kind == CodebookKind::DftOrthogonal {
            require_half_wavelength(array)?;
        }
        let angles: Vec<f64> = file.angles_deg.iter().map(|a| a.to_radians()).collect();
        let mut cb = build_from_angles(&angles, array)?;
        cb.kind = file.kind;
        Ok(cb)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    kind: CodebookKind,
    angles_deg: Vec<f64>,
    num_elements: usize,
}

fn normalized_steering(theta: f64, array: &ArrayConfig) -> ChannelVector {
    let scale = 1.0 / (array.num_elements as f64).sqrt();
    let mut v = steering_vector(theta, array);
    for e in &mut v.entries {
        *e *= scale;
    }
    v
}

fn require_half_wavelength(array: &ArrayConfig) -> Result<()> {
    if (array.element_spacing - 0.5).abs() > 1e-12 {
        return Err(Error::invalid(
            "array.element_spacing",
            "DFT codebook orthogonality requires half-wavelength spacing",
        ));
    }
    Ok(())
}

/// Builds `num_beams` beams at the centers of equal angular bins spanning
/// `[fov_min, fov_max]` (radians off boresight): beam `q` points at
/// `fov_min + (q + 0.5) * span / num_beams`.
pub fn build_uniform_fov(
    num_beams: usize,
    fov_min: f64,
    fov_max: f64,
    array: &ArrayConfig,
) -> Result<Codebook> {
    if num_beams == 0 {
        return Err(Error::invalid("num_beams", "codebook cannot be empty"));
    }
    if !(fov_min < fov_max) || !fov_min.is_finite() || !fov_max.is_finite() {
        return Err(Error::invalid(
            "fov",
            "field of view must satisfy fov_min < fov_max",
        ));
    }
    let step = (fov_max - fov_min) / num_beams as f64;
    let angles: Vec<f64> = (0..num_beams)
        .map(|q| fov_min + (q as f64 + 0.5) * step)
        .collect();
    let mut cb = build_from_angles(&angles, array)?;
    cb.kind = CodebookKind::UniformFov;
    Ok(cb)
}

/// Builds one beam per angle in `angles` (radians off boresight), in order.
/// Duplicate angles are allowed and produce duplicate beams.
pub fn build_from_angles(angles: &[f64], array: &ArrayConfig) -> Result<Codebook> {
    if angles.is_empty() {
        return Err(Error::invalid("angles", "codebook cannot be empty"));
    }
    if let Some(bad) = angles.iter().position(|a| !a.is_finite()) {
        return Err(Error::invalid(
            format!("angles[{bad}]"),
            "angle must be finite",
        ));
    }
    let vectors = angles
        .iter()
        .map(|&a| normalized_steering(a, array))
        .collect();
    Ok(Codebook {
        vectors,
        angles: angles.to_vec(),
        kind: CodebookKind::AngleList,
    })
}

/// Builds the `N`-beam DFT codebook for an `N`-element half-wavelength
/// array: beam `q` points at `asin(-1 + (2q + 1) / N)`, giving mutually
/// orthogonal unit-norm beams.
pub fn build_dft_orthogonal(array: &ArrayConfig) -> Result<Codebook> {
    require_half_wavelength(array)?;
    let n = array.num_elements;
    if n == 0 {
        return Err(Error::invalid("array.num_elements", "array cannot be empty"));
    }
    let angles: Vec<f64> = (0..n)
        .map(|q| (-1.0 + (2 * q + 1) as f64 / n as f64).asin())
        .collect();
    let mut cb = build_from_angles(&angles, array)?;
    cb.kind = CodebookKind::DftOrthogonal;
    Ok(cb)
}

/// Received power of every beam for a channel: `powers[q] = |f_q^H h|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPowerVector {
    pub powers: Vec<f64>,
}

impl BeamPowerVector {
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// Index of the largest power; ties break toward the lower index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.powers.iter().enumerate().skip(1) {
            if p > self.powers[best] {
                best = i;
            }
        }
        best
    }

    /// Beam indices sorted by descending power; equal powers keep ascending
    /// index order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.powers.len()).collect();
        order.sort_by(|&a, &b| {
            self.powers[b]
                .partial_cmp(&self.powers[a])
                .expect("beam powers must not be NaN")
                .then(a.cmp(&b))
        });
        order
    }
}

/// Computes `|f_q^H h|^2` for every beam, in beam order.
pub fn beam_powers(h: &ChannelVector, codebook: &Codebook) -> Result<BeamPowerVector> {
    if h.len() != codebook.num_elements() {
        return Err(Error::dimension_mismatch(
            "channel vs codebook",
            codebook.num_elements(),
            h.len(),
        ));
    }
    let powers = codebook
        .vectors
        .iter()
        .map(|f| f.inner(h).map(|ip| ip.norm_sqr()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(BeamPowerVector { powers })
}

/// Lowest-index beam maximizing received power for `h`.
pub fn optimal_beam(h: &ChannelVector, codebook: &Codebook) -> Result<usize> {
    Ok(beam_powers(h, codebook)?.argmax())
}
