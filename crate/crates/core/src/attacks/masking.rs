use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::batch::{QueryBatch, RatePlan};
use super::mask::Mask;
use super::rate::sample_rate;
use super::{median_in_place, AttackResult, ScoreBoard, TranscriptRow};
use crate::qr::{effective_registers, QrResponse, Responder};
use crate::rank_domain::GroundSet;
use crate::sketch::Registers;
use crate::subset::{sample_bernoulli_into, IndexSet};

/// Score margin above the median needed to enter the mask after `steps` votes:
/// `sqrt(steps ln(200 n r) / 2)`.
pub fn chernoff_threshold(steps: usize, n: usize, r: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    (steps as f64 * (200.0 * n as f64 * r as f64).ln() / 2.0).sqrt()
}

fn response_value(resp: &QrResponse) -> f64 {
    match resp.z {
        Some(z) => z as u8 as f64,
        None => f64::NAN,
    }
}

/// Non-adaptive mask construction against a soft-threshold responder.
///
/// Commits `r` queries with rates from [`sample_rate`] at the responder's `A`, sums the
/// answers per key and keeps the keys scoring more than
/// [`chernoff_threshold`]`(r, n, r)` above the median.
pub fn single_batch_attack<P, R>(qr: &P, ground: &GroundSet, r: usize, rng: &mut R) -> AttackResult
where
    P: Responder + Sync + ?Sized,
    R: Rng + ?Sized,
{
    let n = ground.len();
    let a = qr.threshold_a();
    let batch = QueryBatch::commit(n, r, RatePlan::Threshold { a }, rng);
    let qr_seed: u64 = rng.random();
    let responses = batch.evaluate(|i, u| {
        let mut qr_rng = ChaCha8Rng::seed_from_u64(qr_seed);
        qr_rng.set_stream(i as u64);
        qr.respond(ground, &ground.observe_set(u), None, &mut qr_rng)
    });

    let mut scores = ScoreBoard::new(n);
    let mut transcript = Vec::with_capacity(r);
    let mut failed_at = None;
    let mut buf = IndexSet::new(n);
    for (i, resp) in responses.iter().enumerate() {
        let q = batch.query(i, &mut buf);
        let vote = match resp.z {
            Some(z) => z as u8 as f64,
            None => {
                failed_at.get_or_insert(i + 1);
                0.0
            }
        };
        for x in buf.iter() {
            scores.add(x, vote);
        }
        transcript.push(TranscriptRow {
            step: i + 1,
            query_size: buf.len(),
            rate: q,
            response: response_value(resp),
            mask_size: 0,
            effective_k: resp.effective_k,
            median_score: f64::NAN,
        });
    }

    let mut c = scores.c.clone();
    let median = median_in_place(&mut c);
    let cut = median + chernoff_threshold(r, n, r);
    let mask = Mask::from_indices(n, (0..n as u32).filter(|&x| r > 0 && scores.c[x as usize] > cut), r);
    if let Some(last) = transcript.last_mut() {
        last.median_score = median;
        last.mask_size = mask.len();
    }
    AttackResult {
        ordering: Vec::new(),
        mask: Some(mask),
        scores,
        transcript,
        failed_at,
        warnings: Vec::new(),
    }
}

/// Adaptive mask construction: query `i` is `M ∪ U_i` with `U_i` from the attack
/// distribution, and a key of `U_i` moves into `M` once its vote count reaches
/// `median(C[N \ M]) + chernoff_threshold(i, n, r)`. Stops at the first responder failure.
pub fn adaptive_attack<P, R>(qr: &P, ground: &GroundSet, r: usize, rng: &mut R) -> AttackResult
where
    P: Responder + ?Sized,
    R: Rng + ?Sized,
{
    let n = ground.len();
    let a = qr.threshold_a();
    let mut qr_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut scores = ScoreBoard::new(n);
    let mut mask = Mask::new(n);
    let mut transcript = Vec::with_capacity(r);
    let mut failed_at = None;
    let mut u = IndexSet::new(n);
    let mut rest: Vec<f64> = Vec::with_capacity(n);
    let mut median = 0.0;

    for step in 1..=r {
        let q = sample_rate(a, n, rng);
        sample_bernoulli_into(&mut u, q, rng);
        let obs = ground.observe(|x| u.contains(x) || mask.contains(x));
        let resp = qr.respond(ground, &obs, Some(&mask), &mut qr_rng);
        let mut row = TranscriptRow {
            step,
            query_size: u.len() + mask.indices().iter().filter(|&&x| !u.contains(x)).count(),
            rate: q,
            response: response_value(&resp),
            mask_size: mask.len(),
            effective_k: resp.effective_k,
            median_score: median,
        };
        let Some(z) = resp.z else {
            failed_at = Some(step);
            transcript.push(row);
            break;
        };
        for x in u.iter() {
            scores.add(x, z as u8 as f64);
        }
        // with no new votes neither the median nor any score moves, and the bar only rises
        if z {
            rest.clear();
            rest.extend((0..n as u32).filter(|&x| !mask.contains(x)).map(|x| scores.c[x as usize]));
            median = median_in_place(&mut rest);
            let cut = median + chernoff_threshold(step, n, r);
            for x in u.iter() {
                if !mask.contains(x) && scores.c[x as usize] >= cut {
                    mask.insert(x, step);
                }
            }
            row.median_score = median;
            row.mask_size = mask.len();
        }
        transcript.push(row);
    }
    AttackResult {
        ordering: Vec::new(),
        mask: Some(mask),
        scores,
        transcript,
        failed_at,
        warnings: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskReport {
    pub size: usize,
    /// `|M| / n`.
    pub fraction: f64,
    /// `S(M) == S(N)` bit for bit.
    pub sketch_equal: bool,
    /// Registers where `S(M)` and `S(N)` differ (positions for bottom-k).
    pub differing_registers: Vec<usize>,
    /// Mean of `1 - effective_registers / k` over queries `M ∪ U`.
    pub masking_degree: f64,
}

/// Checks what a mask hides. Queries for the masking degree follow the attack
/// distribution with threshold `a`.
pub fn verify_mask<R: Rng + ?Sized>(mask: &Mask, ground: &GroundSet, a: f64, trials: usize, rng: &mut R) -> MaskReport {
    let n = ground.len();
    let k = ground.k();
    let sm = ground.sketch_of(mask.members());
    let sn = ground.sketch_of_all();
    let differing_registers = match (sm.registers(), sn.registers()) {
        (Registers::Minima(x), Registers::Minima(y)) => diff(x, y),
        (Registers::Exponents(x), Registers::Exponents(y)) => diff(x, y),
        (Registers::Bottom(x), Registers::Bottom(y)) => {
            (0..k).filter(|&i| x.get(i).map(|v| v.to_bits()) != y.get(i).map(|v| v.to_bits())).collect()
        }
        _ => (0..k).collect(),
    };
    let mut u = IndexSet::new(n);
    let mut total = 0.0;
    for _ in 0..trials {
        let q = sample_rate(a, n, rng);
        sample_bernoulli_into(&mut u, q, rng);
        let obs = ground.observe(|x| u.contains(x) || mask.contains(x));
        total += 1.0 - effective_registers(ground, &obs, mask) as f64 / k as f64;
    }
    MaskReport {
        size: mask.len(),
        fraction: mask.len() as f64 / n as f64,
        sketch_equal: sm == sn,
        differing_registers,
        masking_degree: if trials == 0 { f64::NAN } else { total / trials as f64 },
    }
}

fn diff<T: PartialEq + Copy>(x: &[T], y: &[T]) -> Vec<usize> {
    x.iter().zip(y).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
}
