//! Iterative morphological decomposition: pre-filter, type-support filter,
//! iterative atomicity scoring, Otsu thresholding and lexicon extraction.

mod automaton;
mod otsu;
mod prefilter;
mod scoring;
mod support;

pub use automaton::CharAutomaton;
pub use otsu::{otsu_threshold, Histogram, OtsuResult};
pub use prefilter::{drop_reason, prefilter, prefilter_with_stats, DropReason, PrefilterStats};
pub use scoring::{
    best_explanation, decomposable, initial_scores, refine_step, run_refinement, RefinementOutcome,
    RefinementParams, RefinementState, Refiner, StopReason,
};
pub use support::{build_support_index, dedup_surfaces, support_filter, SupportIndex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexicon::{Candidate, MorphemeLexicon, PipelineConfig};

/// Tokens whose final score is at least the threshold, ascending.
pub fn extract_lexicon(
    state: &RefinementState,
    otsu: &OtsuResult,
    language_tag: &str,
) -> MorphemeLexicon {
    let kept = state
        .scores
        .iter()
        .filter(|&(_, s)| s >= otsu.threshold)
        .map(|(t, _)| t.to_owned());
    let lexicon = MorphemeLexicon::new(kept, Some(otsu.threshold), language_tag);
    if lexicon.is_empty() {
        log::warn!(
            "threshold {} is above every score; lexicon is empty",
            otsu.threshold
        );
    }
    lexicon
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionStats {
    pub percent: f64,
    pub factor: f64,
}

/// How much a candidate list shrank: percent removed and initial/final ratio.
pub fn reduction_stats(initial: usize, final_count: usize) -> Result<ReductionStats> {
    if initial == 0 || final_count == 0 {
        return Err(Error::Degenerate(
            "reduction needs positive initial and final counts".into(),
        ));
    }
    let ratio = final_count as f64 / initial as f64;
    Ok(ReductionStats {
        percent: (1.0 - ratio) * 100.0,
        factor: initial as f64 / final_count as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSizes {
    pub raw: usize,
    pub prefiltered: usize,
    pub unique_surfaces: usize,
    pub support_filtered: usize,
    pub lexicon: usize,
}

/// Everything one end-to-end run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub lexicon: MorphemeLexicon,
    pub refinement: RefinementOutcome,
    pub otsu: OtsuResult,
    pub prefilter_stats: PrefilterStats,
    pub stage_sizes: StageSizes,
    pub reduction: ReductionStats,
}

/// Machine-readable summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub max_delta_history: Vec<f64>,
    pub otsu_threshold: f64,
    pub otsu_bins: usize,
    pub inter_class_variance: f64,
    pub pool_sizes_per_stage: StageSizes,
    pub prefilter_drops: PrefilterStats,
    pub reduction: ReductionStats,
}

impl PipelineOutput {
    pub fn report(&self) -> RunReport {
        RunReport {
            iterations: self.refinement.state.iteration,
            stop_reason: self.refinement.stop_reason,
            max_delta_history: self.refinement.max_delta_history.clone(),
            otsu_threshold: self.otsu.threshold,
            otsu_bins: self.otsu.bin_count,
            inter_class_variance: self.otsu.inter_class_variance,
            pool_sizes_per_stage: self.stage_sizes.clone(),
            prefilter_drops: self.prefilter_stats.clone(),
            reduction: self.reduction,
        }
    }
}

/// Runs every stage on a raw candidate list.
///
/// Fails with [`Error::Empty`] when nothing survives filtering and with
/// [`Error::Degenerate`] when all final scores coincide.
pub fn run_pipeline(
    raw: &[Candidate],
    cfg: &PipelineConfig,
    language_tag: &str,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let alphabet = cfg.alphabet_config()?;

    let (filtered, prefilter_stats) = prefilter_with_stats(raw, &alphabet);
    log::info!("pre-filter kept {} of {}", filtered.len(), raw.len());

    let index = build_support_index(&filtered);
    let pool = support_filter(&index, cfg.support_m);
    log::info!(
        "support filter (m = {}) kept {} of {} unique surfaces",
        cfg.support_m,
        pool.len(),
        index.len()
    );
    if pool.is_empty() {
        return Err(Error::Empty("no candidates survive filtering".into()));
    }

    let params = RefinementParams {
        epsilon: cfg.epsilon,
        max_iterations: cfg.max_iterations,
    };
    let refinement = run_refinement(&pool, alphabet.whitelist(), params)?;
    log::info!(
        "refinement stopped after {} iteration(s): {:?}",
        refinement.state.iteration,
        refinement.stop_reason
    );

    let otsu = otsu_threshold(refinement.state.scores.scores(), cfg.otsu_bins)?;
    let lexicon = extract_lexicon(&refinement.state, &otsu, language_tag);
    if lexicon.is_empty() {
        return Err(Error::Empty("lexicon is empty".into()));
    }
    let reduction = reduction_stats(raw.len(), lexicon.len())?;

    let stage_sizes = StageSizes {
        raw: raw.len(),
        prefiltered: filtered.len(),
        unique_surfaces: index.len(),
        support_filtered: pool.len(),
        lexicon: lexicon.len(),
    };
    Ok(PipelineOutput {
        lexicon,
        refinement,
        otsu,
        prefilter_stats,
        stage_sizes,
        reduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::ScoreTable;

    fn state(entries: &[(&str, f64)]) -> RefinementState {
        let t = ScoreTable::new(entries.iter().map(|(t, s)| (t.to_string(), *s)), 0).unwrap();
        RefinementState::new(t)
    }

    fn otsu_at(threshold: f64) -> OtsuResult {
        OtsuResult {
            threshold,
            bin_count: 256,
            boundary: 0,
            inter_class_variance: 0.0,
        }
    }

    #[test]
    fn extract_by_threshold() {
        let s = state(&[("talo", 0.25), ("ssa", 0.3333), ("talossa", 0.0902)]);
        let lex = extract_lexicon(&s, &otsu_at(0.2), "fi");
        assert_eq!(lex.morphemes(), ["ssa", "talo"]);
        assert_eq!(lex.threshold_used, Some(0.2));

        assert_eq!(extract_lexicon(&s, &otsu_at(0.0902), "fi").len(), 3);
        assert!(extract_lexicon(&s, &otsu_at(0.5), "fi").is_empty());
    }

    #[test]
    fn reduction_rows() {
        let r = reduction_stats(499_647, 3_850).unwrap();
        assert!((r.percent - 99.23).abs() < 0.01);
        assert!((r.factor - 129.8).abs() < 0.1);
        let r = reduction_stats(281_256, 5_705).unwrap();
        assert!((r.percent - 97.97).abs() < 0.01);
        assert!((r.factor - 49.3).abs() < 0.1);
        let r = reduction_stats(7, 7).unwrap();
        assert_eq!((r.percent, r.factor), (0.0, 1.0));
        assert!(reduction_stats(10, 0).is_err());
    }

    #[test]
    fn pipeline_separates_planted_atoms() {
        let cfg = PipelineConfig {
            support_m: 0,
            ..PipelineConfig::from_json(r#"{"alphabet":"abcdefghijklmnopqrstuvwxyzäö"}"#).unwrap()
        };
        let raw: Vec<Candidate> = [
            "talo",
            "kala",
            "ssa",
            "ni",
            "lla",
            "talossa",
            "talossani",
            "kalassa",
            "kalalla",
            "talolla",
            "kalani",
            "taloni",
        ]
        .iter()
        .map(|s| Candidate::plain(s).unwrap())
        .collect();
        let out = run_pipeline(&raw, &cfg, "fi").unwrap();
        assert_eq!(
            out.lexicon.morphemes(),
            ["kala", "lla", "ni", "ssa", "talo"]
        );
        assert_eq!(out.stage_sizes.raw, 12);
        assert_eq!(out.stage_sizes.lexicon, 5);
    }

    #[test]
    fn pipeline_empty_after_filtering() {
        let cfg = PipelineConfig::from_json(r#"{"alphabet":"abc"}"#).unwrap();
        let raw = vec![Candidate::plain("Abc").unwrap()];
        assert!(matches!(
            run_pipeline(&raw, &cfg, "x"),
            Err(Error::Empty(_))
        ));
    }
}
