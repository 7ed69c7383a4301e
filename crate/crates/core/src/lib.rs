//! Corpus-phonetics preparation and post-processing for forced alignment.
//!
//! The modules cover the files that sit around an aligner run: Praat
//! TextGrids, Kaldi data directories, pronunciation lexicons, CTM output,
//! FAVE/MFA transcript checks, WAV header checks, and the window
//! preparation and measurement steps of an AutoVOT workflow.

pub mod report;
pub mod audio_check;
pub mod ctm_align;
pub mod kaldi_data;
pub mod lexicon;
pub mod textgrid;
pub mod transcripts;
pub mod vot_prep;

pub use report::{Finding, Severity, ValidationReport};
