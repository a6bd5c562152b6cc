// scratch: quick convergence probe for the toy corpus (not shipped behavior)
use expclip_core::expclip::*;
use expclip_core::facs::AuBlendshapeMap;
use expclip_core::tead::toy;
use std::time::Instant;

fn main() {
    let map = AuBlendshapeMap::<f32>::shipped();
    let store = toy::build_toy_store(42, &map);
    let mut model = ExpClipModel::<f32>::new(ExpClipModelConfig::default());
    let cfg = ExpClipTrainConfig::toy();
    let t0 = Instant::now();
    let state = train_expclip_text(&mut model, &store, &cfg, None).unwrap();
    let dt = t0.elapsed();
    let h = &state.history;
    println!("epochs={} time={:.1?} per-epoch={:.1?}", h.len(), dt, dt / h.len() as u32);
    println!("first: {:?}", h.first().unwrap());
    println!("last:  {:?}", h.last().unwrap());

    // held-out eval
    let (train_ids, test_ids) = store.split(cfg.train_fraction).unwrap();
    let _ = train_ids;
    let test = store.subset(&test_ids);
    let mut mse_sum = 0.0f64;
    for q in &test {
        let z = model.encode_expression(&q.blendshapes);
        let rec = model.decode_expression(&z).unwrap();
        let mse: f32 = rec.values().iter().zip(q.blendshapes.values())
            .map(|(a,b)| (a-b)*(a-b)).sum::<f32>() / 52.0;
        mse_sum += mse as f64;
    }
    println!("held-out recon MSE = {:.5}", mse_sum / test.len() as f64);

    // retrieval: tag view -> top-1 among 8 centroids
    let centroids: Vec<_> = (0..toy::CLUSTER_COUNT)
        .map(|c| model.encode_expression(&toy::cluster_centroid(c, &map)))
        .collect();
    let mut hits = 0usize;
    for q in &test {
        let ztext = model.encode_text(&q.tags.join(", ")).unwrap();
        let true_cluster = toy::cluster_of_id(&q.id).unwrap();
        let best = (0..8).max_by(|&a,&b| {
            let sa = ztext.cosine_similarity(&centroids[a]).unwrap();
            let sb = ztext.cosine_similarity(&centroids[b]).unwrap();
            sa.partial_cmp(&sb).unwrap()
        }).unwrap();
        if best == true_cluster { hits += 1; }
    }
    println!("retrieval top-1 = {}/{} = {:.1}%", hits, test.len(), 100.0*hits as f64/test.len() as f64);
}
