//! Confidence-based dynamic filtering (CDF) of pseudo-labels.
//!
//! The filter keeps a global threshold and one local threshold per class,
//! both EMA-smoothed across training steps from the teacher's prediction
//! confidences. The effective per-class threshold scales the global value by
//! the class's local threshold relative to the strongest class, so minority
//! classes with lower confidence get proportionally lower bars.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{ProbMap, PseudoLabelMap, IGNORE};
use crate::error::{Error, Result};

/// Threshold value used when the dynamic filter is disabled.
pub const FIXED_THRESHOLD: f64 = 0.95;

/// Configuration of the dynamic filter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CdfConfig {
    /// EMA momentum for threshold updates.
    pub ema_lambda: f64,
    /// Exponent controlling the impact of the local thresholds.
    pub gamma: f64,
    /// Initial global threshold.
    pub t_init_global: f64,
    /// Number of classes.
    pub num_classes: usize,
}

impl CdfConfig {
    pub fn new(num_classes: usize) -> Self {
        CdfConfig {
            ema_lambda: 0.999,
            gamma: 0.25,
            t_init_global: 0.85,
            num_classes,
        }
    }
}

/// EMA threshold state. Updated by exactly one writer per training step;
/// updates return a fresh value so concurrent readers keep a stable snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub t_global: f64,
    pub t_local: Vec<f64>,
    pub step: u64,
}

impl ThresholdState {
    /// State at step zero: global at its configured init, locals at `1/K`.
    pub fn new(config: &CdfConfig) -> Self {
        ThresholdState {
            t_global: config.t_init_global,
            t_local: vec![1.0 / config.num_classes as f64; config.num_classes],
            step: 0,
        }
    }
}

/// Batch confidence summary: per-class mean max-probability over pixels whose
/// argmax is that class (`None` when the class has no argmax pixels), and the
/// macro average over present classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassConfidence {
    pub local: Vec<Option<f64>>,
    pub global: Option<f64>,
}

/// Mean prediction confidence per class over a batch of probability maps.
pub fn class_confidence(probs: &[ProbMap], num_classes: usize) -> ClassConfidence {
    let mut sums = vec![0.0f64; num_classes];
    let mut counts = vec![0u64; num_classes];
    for map in probs {
        let (cls, conf) = map.argmax_conf();
        for (c, p) in cls.iter().zip(conf.iter()) {
            sums[*c as usize] += *p as f64;
            counts[*c as usize] += 1;
        }
    }
    let local: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| if n > 0 { Some(s / n as f64) } else { None })
        .collect();
    let present: Vec<f64> = local.iter().flatten().copied().collect();
    let global = if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    };
    ClassConfidence { local, global }
}

/// One EMA step of the global and local thresholds. Classes absent from the
/// batch keep their previous threshold (no decay toward stale values).
pub fn update_thresholds(
    state: &ThresholdState,
    confidence: &ClassConfidence,
    config: &CdfConfig,
) -> ThresholdState {
    let lambda = config.ema_lambda;
    let mut next = state.clone();
    if let Some(g) = confidence.global {
        next.t_global = lambda * state.t_global + (1.0 - lambda) * g;
    }
    for (c, alpha) in confidence.local.iter().enumerate() {
        if let Some(a) = alpha {
            next.t_local[c] = lambda * state.t_local[c] + (1.0 - lambda) * a;
        }
    }
    next.step = state.step + 1;
    next
}

/// Effective per-class thresholds: `T(c) = T_g * (T_l(c) / max_c T_l(c))^gamma`.
pub fn effective_threshold(state: &ThresholdState, config: &CdfConfig) -> Result<Vec<f64>> {
    let max_local = state.t_local.iter().cloned().fold(f64::MIN, f64::max);
    if !(max_local > 0.0) {
        return Err(Error::DegenerateThresholds(
            "all local thresholds are zero".into(),
        ));
    }
    Ok(state
        .t_local
        .iter()
        .map(|&tl| state.t_global * (tl / max_local).powf(config.gamma))
        .collect())
}

/// Uniform threshold vector for the fixed-threshold baseline.
pub fn fixed_thresholds(num_classes: usize, value: f64) -> Vec<f64> {
    vec![value; num_classes]
}

/// Hard pseudo-labels: a pixel is kept with its argmax class when its max
/// probability reaches that class's threshold, otherwise marked IGNORE.
pub fn filter_pseudo_labels(probs: &ProbMap, thresholds: &[f64]) -> Result<PseudoLabelMap> {
    if thresholds.len() != probs.num_classes() {
        return Err(Error::shape(
            "filter_pseudo_labels thresholds",
            format!("{}", probs.num_classes()),
            format!("{}", thresholds.len()),
        ));
    }
    let (cls, conf) = probs.argmax_conf();
    let (h, w) = cls.dim();
    let mut out = Array2::<u8>::from_elem((h, w), IGNORE);
    for i in 0..h {
        for j in 0..w {
            let c = cls[[i, j]] as usize;
            if conf[[i, j]] as f64 >= thresholds[c] {
                out[[i, j]] = c as u8;
            }
        }
    }
    Ok(PseudoLabelMap::new(out))
}

/// Per-class fraction of argmax pixels that survived filtering. `None` for
/// classes without any argmax pixels in the batch.
pub fn utilization(
    pseudo: &[PseudoLabelMap],
    reference_argmax: &[Array2<u8>],
    num_classes: usize,
) -> Result<Vec<Option<f64>>> {
    if pseudo.len() != reference_argmax.len() {
        return Err(Error::shape(
            "utilization batch",
            format!("{}", pseudo.len()),
            format!("{}", reference_argmax.len()),
        ));
    }
    let mut kept = vec![0u64; num_classes];
    let mut total = vec![0u64; num_classes];
    for (p, r) in pseudo.iter().zip(reference_argmax) {
        if p.labels().dim() != r.dim() {
            return Err(Error::shape(
                "utilization map",
                format!("{:?}", p.labels().dim()),
                format!("{:?}", r.dim()),
            ));
        }
        for (&pl, &rc) in p.labels().iter().zip(r.iter()) {
            let c = rc as usize;
            total[c] += 1;
            if pl != IGNORE {
                kept[c] += 1;
            }
        }
    }
    Ok(kept
        .iter()
        .zip(&total)
        .map(|(&k, &t)| if t > 0 { Some(k as f64 / t as f64) } else { None })
        .collect())
}

/// Append-only CSV log of thresholds and utilization, one row per epoch.
///
/// Columns: `epoch, t_global, t_local_<c>.., t_eff_<c>.., util_<c>..,
/// util_fixed_<c>..` where the fixed columns track what a constant-threshold
/// filter would have kept on the same predictions.
pub struct ThresholdCsv {
    path: PathBuf,
    num_classes: usize,
    started: bool,
}

impl ThresholdCsv {
    pub fn create(path: impl AsRef<Path>, num_classes: usize) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        std::fs::write(&path, Self::header(num_classes))?;
        Ok(ThresholdCsv {
            path,
            num_classes,
            started: true,
        })
    }

    fn header(num_classes: usize) -> String {
        let mut cols = vec!["epoch".to_string(), "t_global".to_string()];
        for c in 0..num_classes {
            cols.push(format!("t_local_{c}"));
        }
        for c in 0..num_classes {
            cols.push(format!("t_eff_{c}"));
        }
        for c in 0..num_classes {
            cols.push(format!("util_{c}"));
        }
        for c in 0..num_classes {
            cols.push(format!("util_fixed_{c}"));
        }
        cols.join(",") + "\n"
    }

    pub fn append(
        &mut self,
        epoch: usize,
        state: &ThresholdState,
        effective: &[f64],
        util: &[Option<f64>],
        util_fixed: &[Option<f64>],
    ) -> Result<()> {
        debug_assert!(self.started);
        let mut row = format!("{epoch},{:.6}", state.t_global);
        for c in 0..self.num_classes {
            row.push_str(&format!(",{:.6}", state.t_local[c]));
        }
        for c in 0..self.num_classes {
            row.push_str(&format!(",{:.6}", effective[c]));
        }
        for v in util.iter().chain(util_fixed.iter()) {
            match v {
                Some(u) => row.push_str(&format!(",{u:.6}")),
                None => row.push_str(","),
            }
        }
        row.push('\n');
        let mut f = std::fs::OpenOptions::new().append(true).open(&self.path)?;
        f.write_all(row.as_bytes())?;
        Ok(())
    }
}
