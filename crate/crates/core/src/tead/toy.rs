//! Shipped synthetic corpus: 8 emotion clusters x 25 quadruples, built from
//! the shipped AU table with mild per-record jitter. Small enough to train
//! the whole stack on a laptop CPU in minutes, structured enough that tag
//! text, transcripts and expressions agree within each cluster.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::facs::{au_to_blendshapes, perturb_blendshapes, AuBlendshapeMap, AuVector, BlendshapeWeights};
use crate::scalar::Scalar;
use crate::tead::{Quadruple, TeadStore};

pub const CLUSTER_COUNT: usize = 8;
pub const RECORDS_PER_CLUSTER: usize = 25;

/// Per-record jitter applied to the cluster's base expression.
const JITTER: f64 = 0.03;

struct ClusterSpec {
    name: &'static str,
    au_labels: &'static [&'static str],
    tags: &'static [&'static str],
    transcripts: &'static [&'static str],
    situations: &'static [&'static str],
}

const CLUSTERS: [ClusterSpec; CLUSTER_COUNT] = [
    ClusterSpec {
        name: "happy",
        au_labels: &["AU06_cheek_raiser", "AU12_lip_corner_puller", "AU25_lips_part"],
        tags: &["happy", "joyful", "cheerful", "delighted", "glad", "content"],
        transcripts: &[
            "I just got the best news of my life",
            "What a wonderful surprise this turned out to be",
            "Everything is finally going my way",
            "I can't stop smiling today",
            "This is the happiest I've felt in years",
            "We did it, we actually did it",
        ],
        situations: &[
            "Receiving an unexpected gift from a close friend.",
            "Hearing that a loved one is coming home.",
            "Winning a small prize after a long week.",
            "Watching a child take their first steps.",
            "Getting the job offer you hoped for.",
        ],
    },
    ClusterSpec {
        name: "sad",
        au_labels: &["AU01_inner_brow_raiser", "AU04_brow_lowerer", "AU15_lip_corner_depressor"],
        tags: &["sad", "gloomy", "sorrowful", "dejected", "downcast", "heartbroken"],
        transcripts: &[
            "Nothing feels right since they left",
            "I miss the way things used to be",
            "It all fell apart so quickly",
            "I don't know how to carry this weight",
            "The house feels so empty now",
            "I keep replaying that goodbye",
        ],
        situations: &[
            "Saying farewell to an old friend at the station.",
            "Finding a photo of someone who passed away.",
            "Coming home to an empty apartment after a breakup.",
            "Hearing bad news about a family member.",
            "Packing up a childhood home for the last time.",
        ],
    },
    ClusterSpec {
        name: "angry",
        au_labels: &["AU04_brow_lowerer", "AU07_lid_tightener", "AU23_lip_tightener", "AU24_lip_pressor"],
        tags: &["angry", "furious", "irritated", "resentful", "enraged", "annoyed"],
        transcripts: &[
            "How dare they lie to my face",
            "I am done being treated like this",
            "They broke their promise again",
            "This is absolutely unacceptable",
            "I can't believe they went behind my back",
            "Stop wasting my time with excuses",
        ],
        situations: &[
            "Being blamed for a mistake someone else made.",
            "Discovering a colleague took credit for your work.",
            "Getting cut off in traffic on a bad morning.",
            "Finding out a friend shared a secret you told them.",
            "Waiting an hour for someone who never shows up.",
        ],
    },
    ClusterSpec {
        name: "fearful",
        au_labels: &["AU01_inner_brow_raiser", "AU02_outer_brow_raiser", "AU05_upper_lid_raiser", "AU20_lip_stretcher"],
        tags: &["afraid", "fearful", "anxious", "terrified", "nervous", "panicked"],
        transcripts: &[
            "Something is moving in the dark hallway",
            "I don't think we're alone in here",
            "My heart is pounding and I can't breathe",
            "Please don't let them find us",
            "The floor just shook beneath my feet",
            "I heard footsteps behind me again",
        ],
        situations: &[
            "Walking alone through an unlit parking garage.",
            "Waiting for a call with serious medical results.",
            "Hearing a window break downstairs at night.",
            "Standing at the edge of a very high bridge.",
            "Losing sight of your child in a crowded market.",
        ],
    },
    ClusterSpec {
        name: "surprised",
        au_labels: &["AU01_inner_brow_raiser", "AU02_outer_brow_raiser", "AU05_upper_lid_raiser", "AU26_jaw_drop"],
        tags: &["surprised", "astonished", "amazed", "startled", "stunned", "shocked"],
        transcripts: &[
            "I never saw that coming at all",
            "Wait, they were planning this the whole time",
            "You're telling me we won the grand prize",
            "The ending completely blindsided me",
            "I opened the door and everyone was there",
            "No way, that can't be true",
        ],
        situations: &[
            "Walking into a surprise party thrown in your honor.",
            "Learning a quiet coworker is a famous musician.",
            "Finding an old lottery ticket that turns out to win.",
            "Seeing snow fall in the middle of summer.",
            "Running into a childhood friend on another continent.",
        ],
    },
    ClusterSpec {
        name: "disgusted",
        au_labels: &["AU09_nose_wrinkler", "AU10_upper_lip_raiser", "AU16_lower_lip_depressor"],
        tags: &["disgusted", "revolted", "repulsed", "nauseated", "sickened", "grossed"],
        transcripts: &[
            "The smell coming from that fridge is unbearable",
            "There was a hair baked into my food",
            "I can't even look at that mess",
            "Who leaves dishes rotting for weeks",
            "That was the most vile thing I've ever tasted",
            "The floor was sticky with something unspeakable",
        ],
        situations: &[
            "Opening a lunchbox forgotten in a locker for a month.",
            "Stepping barefoot on something wet in the kitchen.",
            "Finding mold inside a coffee mug at the office.",
            "Smelling spoiled milk while cleaning the fridge.",
            "Watching someone sneeze into the buffet tray.",
        ],
    },
    ClusterSpec {
        name: "calm",
        au_labels: &["AU41_lid_droop"],
        tags: &["calm", "relaxed", "peaceful", "serene", "tranquil", "composed"],
        transcripts: &[
            "The lake is perfectly still this morning",
            "I have nowhere to be and nothing to rush",
            "Breathing slowly, everything feels settled",
            "The rain on the roof is all I can hear",
            "It's quiet here, and that is enough",
            "I feel at ease with how things are",
        ],
        situations: &[
            "Sipping tea on a porch during soft rain.",
            "Floating on your back in a warm quiet pool.",
            "Reading by a window as evening settles in.",
            "Watching embers glow after a campfire dinner.",
            "Lying in fresh grass under slow clouds.",
        ],
    },
    ClusterSpec {
        name: "excited",
        au_labels: &["AU01_inner_brow_raiser", "AU02_outer_brow_raiser", "AU05_upper_lid_raiser", "AU12_lip_corner_puller", "AU25_lips_part"],
        tags: &["excited", "thrilled", "eager", "exhilarated", "energized", "elated"],
        transcripts: &[
            "The tickets finally arrived, we're really going",
            "I can't wait for tomorrow to come",
            "This is going to be the adventure of a lifetime",
            "They said yes, they actually said yes",
            "Count me in, when do we start",
            "My hands are shaking, it's really happening",
        ],
        situations: &[
            "Boarding a plane for a long-awaited trip.",
            "Counting down the final seconds of the year.",
            "Opening the box of a gadget you saved up for.",
            "Hearing your name called as the winner.",
            "Standing in line for the first ride of the day.",
        ],
    },
];

pub fn cluster_names() -> Vec<&'static str> {
    CLUSTERS.iter().map(|c| c.name).collect()
}

/// The jitter-free base expression of one cluster.
pub fn cluster_centroid<T: Scalar>(
    cluster: usize,
    map: &AuBlendshapeMap<T>,
) -> BlendshapeWeights<T> {
    let spec = &CLUSTERS[cluster];
    let indices: Vec<usize> = spec
        .au_labels
        .iter()
        .map(|label| map.au_index(label).expect("cluster AU label in shipped table"))
        .collect();
    au_to_blendshapes(&AuVector::from_active(&indices), map)
}

/// Which cluster a toy record id belongs to.
pub fn cluster_of_id(id: &str) -> Option<usize> {
    let name = id.rsplit_once('_')?.0;
    CLUSTERS.iter().position(|c| c.name == name)
}

/// Build the full synthetic store: 8 clusters x 25 records, deterministic in
/// the seed, ids formatted `<cluster>_<index>`.
pub fn build_toy_store<T: Scalar>(seed: u64, map: &AuBlendshapeMap<T>) -> TeadStore<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = T::from_f64_lit(JITTER);
    let mut records = Vec::with_capacity(CLUSTER_COUNT * RECORDS_PER_CLUSTER);
    for (cluster_idx, spec) in CLUSTERS.iter().enumerate() {
        let base = cluster_centroid(cluster_idx, map);
        for i in 0..RECORDS_PER_CLUSTER {
            let blendshapes =
                perturb_blendshapes(&base, jitter, &mut rng).expect("non-negative jitter");
            let n_tags = rng.gen_range(3..=5usize);
            let mut tags: Vec<String> = spec.tags.iter().map(|t| t.to_string()).collect();
            tags.shuffle(&mut rng);
            tags.truncate(n_tags);
            let transcript = spec.transcripts[i % spec.transcripts.len()].to_string();
            let situation = spec.situations[i % spec.situations.len()].to_string();
            records.push(Quadruple {
                id: format!("{}_{i:02}", spec.name),
                transcript,
                tags,
                blendshapes,
                situation,
            });
        }
    }
    TeadStore::new(records, seed).expect("toy records satisfy all invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_store_has_expected_shape() {
        let map = AuBlendshapeMap::<f32>::shipped();
        let store = build_toy_store(1, &map);
        assert_eq!(store.len(), CLUSTER_COUNT * RECORDS_PER_CLUSTER);
        for q in store.records() {
            q.validate().unwrap();
            assert!(cluster_of_id(&q.id).is_some(), "id {}", q.id);
        }
    }

    #[test]
    fn toy_store_is_deterministic() {
        let map = AuBlendshapeMap::<f32>::shipped();
        let a = build_toy_store(3, &map);
        let b = build_toy_store(3, &map);
        for (x, y) in a.records().iter().zip(b.records()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn records_stay_near_their_centroid() {
        let map = AuBlendshapeMap::<f64>::shipped();
        let store = build_toy_store(2, &map);
        for q in store.records() {
            let cluster = cluster_of_id(&q.id).unwrap();
            let centroid = cluster_centroid(cluster, &map);
            for (got, want) in q.blendshapes.values().iter().zip(centroid.values()) {
                assert!((got - want).abs() <= JITTER + 1e-12);
            }
        }
    }

    #[test]
    fn clusters_have_distinct_centroids() {
        let map = AuBlendshapeMap::<f64>::shipped();
        for a in 0..CLUSTER_COUNT {
            for b in (a + 1)..CLUSTER_COUNT {
                let ca = cluster_centroid(a, &map);
                let cb = cluster_centroid(b, &map);
                assert_ne!(ca.values(), cb.values(), "clusters {a} and {b}");
            }
        }
    }
}
