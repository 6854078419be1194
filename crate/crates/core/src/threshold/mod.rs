//! Stratified annotation of the ranked candidate list and selection of the
//! retention cutoff.

mod decision;
mod journal;
mod labels;
mod partition;

pub use decision::{select_threshold, PartitionStats, ThresholdDecision};
pub use journal::{LabelJournal, Submission};
pub use labels::{
    adjudicate, import_labels, labels_to_csv, labels_to_jsonl, parse_labels_csv, parse_labels_jsonl,
    validate_labels, DomainLabel, DomainLabelKind, HazardCluster, LabelImport, DEFAULT_ANNOTATOR,
};
pub use partition::{make_partitions, sample_for_annotation, AnnotationBatch, BatchItem, Partition};
