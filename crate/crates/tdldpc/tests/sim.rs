use tdldpc::classifier::reference_catalog;
use tdldpc::code::{code_from_mols, ParityCheckMatrix};
use tdldpc::existence::{find_instances, AbsorbingSetType};
use tdldpc::gf::PrimeField;
use tdldpc::mols::MolsSet;
use tdldpc::setsystem::enumerate_colourings;
use tdldpc::sim::{
    classify_failure, noise_sigma, reports_csv, run_simulation, spa_decode, transmit, ChannelConfig, DecoderConfig,
};

fn code(q: u64, alphas: &[i64]) -> ParityCheckMatrix {
    code_from_mols(&MolsSet::reduced(PrimeField::new(q).unwrap(), alphas).unwrap())
}

/// Sum-product on bit probabilities, written independently of the log-domain decoder.
fn prob_domain(h: &ParityCheckMatrix, llr: &[f64], iters: usize) -> (Vec<u8>, bool) {
    let n = h.cols();
    let p1: Vec<f64> = llr.iter().map(|l| 1.0 / (1.0 + l.exp())).collect();
    let mut q: Vec<Vec<f64>> = (0..h.rows()).map(|r| h.row(r).iter().map(|&v| p1[v]).collect()).collect();
    let mut hard: Vec<u8> = p1.iter().map(|&p| u8::from(p > 0.5)).collect();
    if h.syndrome_is_zero(&hard) {
        return (hard, true);
    }
    for _ in 0..iters {
        let mut r1 = vec![Vec::new(); h.rows()];
        for (r, qs) in q.iter().enumerate() {
            r1[r] = (0..qs.len())
                .map(|j| {
                    let prod: f64 = (0..qs.len()).filter(|&i| i != j).map(|i| 1.0 - 2.0 * qs[i]).product();
                    (1.0 - prod) / 2.0
                })
                .collect();
        }
        for v in 0..n {
            let incoming: Vec<(usize, f64)> =
                h.col(v).iter().map(|&r| (r, r1[r][h.row(r).iter().position(|&x| x == v).unwrap()])).collect();
            let (mut a1, mut a0) = (p1[v], 1.0 - p1[v]);
            for &(_, m) in &incoming {
                a1 *= m;
                a0 *= 1.0 - m;
            }
            hard[v] = u8::from(a1 > a0);
            for &(r, m) in &incoming {
                let (e1, e0) = (a1 / m, a0 / (1.0 - m));
                let pos = h.row(r).iter().position(|&x| x == v).unwrap();
                q[r][pos] = e1 / (e1 + e0);
            }
        }
        if h.syndrome_is_zero(&hard) {
            return (hard, true);
        }
    }
    (hard, false)
}

#[test]
fn log_domain_matches_probability_domain() {
    let h = code(7, &[1, 3]);
    let sigma = noise_sigma(2.5, h.rank_and_rate().rate);
    let cfg = DecoderConfig { max_iters: 15, llr_clip: 30.0 };
    let mut agree = 0;
    for f in 0..200 {
        let llr = transmit(&vec![0; h.cols()], sigma, 11, f);
        let r = spa_decode(&h, &llr, &cfg);
        let (bits, conv) = prob_domain(&h, &llr, 15);
        agree += usize::from(r.bits == bits && r.converged == conv);
    }
    assert!(agree >= 198, "{agree}/200");
}

#[test]
fn single_strong_error_is_corrected() {
    let h = code(5, &[1, 2]);
    for v in 0..25 {
        let mut llr = vec![20.0; 25];
        llr[v] = -20.0;
        let r = spa_decode(&h, &llr, &DecoderConfig::default());
        assert!(r.converged && r.bits.iter().all(|&b| b == 0), "bit {v}");
    }
}

#[test]
fn report_independent_of_thread_count() {
    let h = code(7, &[1, 2]);
    let ch = ChannelConfig { ebn0_db: 2.0, seed: 99, frames: 400 };
    let dec = DecoderConfig { max_iters: 30, llr_clip: 30.0 };
    let outs: Vec<String> = [1, 2, 8]
        .iter()
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            let r = pool.install(|| run_simulation(&h, &ch, &dec).unwrap());
            assert!(r.frame_errors > 0);
            serde_json::to_string(&r).unwrap() + &reports_csv(&[r])
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[test]
fn report_invariants_and_monotone_snr() {
    let h = code(13, &[1, 4]);
    let dec = DecoderConfig { max_iters: 50, llr_clip: 30.0 };
    let at = |db: f64| run_simulation(&h, &ChannelConfig { ebn0_db: db, seed: 5, frames: 10_000 }, &dec).unwrap();
    let (lo, hi) = (at(4.0), at(5.0));
    assert!(lo.fer >= hi.fer, "{} < {}", lo.fer, hi.fer);
    for r in [&lo, &hi] {
        assert!(r.ber <= r.fer);
        for c in &r.detections {
            assert!(c.fully <= c.total && c.elementary <= c.total);
        }
        let cells: u64 = r.detections.iter().map(|c| c.total).sum();
        assert_eq!(cells + r.unclassified, r.frame_errors);
    }
}

#[test]
fn failure_classification() {
    let h = code(13, &[1, 2]);
    let sys = reference_catalog(4).into_iter().find(|(l, _)| l == "(4,4)").unwrap().1;
    let inst = enumerate_colourings(&sys, 4)
        .into_iter()
        .flat_map(|c| {
            find_instances(&h, &AbsorbingSetType { system: sys.clone(), colouring: c, mapping: None }).unwrap()
        })
        .next()
        .expect("code has a (4,4) absorbing set");
    let d = classify_failure(&h, &inst.bits).unwrap();
    assert_eq!((d.a, d.b), (4, 4));
    assert!(d.elementary);
    // two bits sharing no check leave every check odd
    let mut pair = vec![0];
    pair.push((1..h.cols()).find(|&v| h.col(v).iter().all(|r| !h.col(0).contains(r))).unwrap());
    assert_eq!(classify_failure(&h, &pair), None);
}
