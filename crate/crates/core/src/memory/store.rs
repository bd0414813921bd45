use super::encoder::{EncoderParams, Embedding, EMBED_DIM};
use super::tensor::GridTensor;
use super::MemoryError;
use crate::exec::map_indexed;
use crate::geom::Environment;
use crate::robot::MotionPlan;

const ENCODE_CHUNK: usize = 64;

/// Stored plans with the centroid embedding of each plan's cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStore {
    pub plans: Vec<MotionPlan>,
    pub centroids: Vec<Embedding>,
    pub encoder: EncoderParams<f32>,
}

/// Embeddings of `grids`, encoded in fixed-size chunks.
pub fn encode_all(params: &EncoderParams<f32>, grids: &[GridTensor]) -> Vec<Embedding> {
    let chunks = grids.len().div_ceil(ENCODE_CHUNK);
    map_indexed(chunks, |c| {
        let end = ((c + 1) * ENCODE_CHUNK).min(grids.len());
        params.encode_batch(&grids[c * ENCODE_CHUNK..end])
    })
    .into_iter()
    .flatten()
    .collect()
}

pub fn mean_embedding(es: &[Embedding]) -> Embedding {
    let mut c = [0.0; EMBED_DIM];
    for e in es {
        for (a, b) in c.iter_mut().zip(e) {
            *a += b;
        }
    }
    c.iter_mut().for_each(|v| *v /= es.len() as f64);
    c
}

/// Centroid of each cluster under `params`; `plans[i]` solves cluster `i`.
pub fn build_store(
    params: EncoderParams<f32>,
    clusters: &[Vec<GridTensor>],
    plans: Vec<MotionPlan>,
) -> Result<MemoryStore, MemoryError> {
    if clusters.is_empty() || clusters.len() != plans.len() {
        return Err(MemoryError::Mismatch(clusters.len(), plans.len()));
    }
    if let Some(i) = clusters.iter().position(Vec::is_empty) {
        return Err(MemoryError::EmptyCluster(i));
    }
    let centroids = clusters.iter().map(|c| mean_embedding(&encode_all(&params, c))).collect();
    Ok(MemoryStore {
        plans,
        centroids,
        encoder: params,
    })
}

pub fn embedding_distance(a: &Embedding, b: &Embedding) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl MemoryStore {
    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// The `k` clusters whose centroids are nearest to `e`, ascending by
    /// distance with ties going to the lower index.
    pub fn nearest_clusters(&self, e: &Embedding, k: usize) -> Result<Vec<(usize, f64)>, MemoryError> {
        if k == 0 || k > self.len() {
            return Err(MemoryError::BadK(k, self.len()));
        }
        let mut d: Vec<(usize, f64)> = self
            .centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (i, embedding_distance(e, c)))
            .collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.truncate(k);
        Ok(d)
    }

    pub fn embed(&self, env: &Environment) -> Result<Embedding, MemoryError> {
        Ok(self.encoder.encode(&GridTensor::from_env(env)?))
    }

    /// The plans of the `k` nearest centroids to `env`'s embedding.
    pub fn retrieve(&self, env: &Environment, k: usize) -> Result<Vec<(&MotionPlan, f64)>, MemoryError> {
        let e = self.embed(env)?;
        Ok(self
            .nearest_clusters(&e, k)?
            .into_iter()
            .map(|(i, d)| (&self.plans[i], d))
            .collect())
    }
}
