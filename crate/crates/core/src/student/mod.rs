//! The learned half of the polisher: a differentiable model that predicts
//! the optimization center, which branches survive, and how the expansion
//! region grows, trained against the combinatorial annotator's labels.

pub mod decode;
pub mod feat;
pub mod gradcheck;
pub mod model;
pub mod mpn;
pub mod tape;
pub mod tensor;
pub mod train;

pub use decode::{
    added_region, decode_forced, decode_greedy, decode_script, generate, identify_center_image, merge_final,
    preserved_region, replay_pair, DecodeScript, DecodeTrace, ForcedDecode, GenerationOutcome, ScriptStep,
};
pub use gradcheck::{check_gradients, GradCheckReport};
pub use model::{
    bernoulli_loss, branches_in_written_order, categorical_loss, center_loss, predict_center, EncodedViews,
    StudentConfig, StudentModel,
};
pub use mpn::{MessagePassing, Mlp};
pub use tape::{Tape, ValueId};
pub use tensor::{ParamId, ParamStore, Tensor};
pub use train::{
    forward_sample, load_checkpoint, prepare_corpus, save_checkpoint, train, weighted_total, EpochRow,
    PreparedCorpus, SampleLosses, SkipReason, TrainOutcome, TrainSample,
};
