//! Semi-automatic annotation: propagating keyframe boxes through a clip
//! with a geometric refiner, and labeling a static scene from a ground-plane
//! fit plus Euclidean clustering.

mod refine;
mod static_scene;

pub use refine::{
    box_confidence, refine_boxes, BoxOrigin, BoxRefiner, IcpRefiner, RefineContext, RefineOutput, RefineParams,
    RefinedBox, Template, MAX_ATTEMPTS,
};
pub use static_scene::{
    annotate_static_scene, cluster_points, label_clusters, remove_objects, segment_ground, ClusterParams, ClusterRules,
    StaticAnnotation,
};
