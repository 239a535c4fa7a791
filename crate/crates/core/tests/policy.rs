use sconeparse::data::{decompose, generate_synthetic};
use sconeparse::explore::sample_eps_greedy;
use sconeparse::harness::gradcheck;
use sconeparse::lang::{Vocabulary, DEFAULT_BUDGET};
use sconeparse::policy::{checkpoint, Adam, Dims, HistoryKind, Model, OptimError, Params, WordVectors};
use sconeparse::worlds::Domain;

fn params(kind: HistoryKind) -> Params<f64> {
    Params::init(3, Dims::tiny(), Vocabulary::new(Domain::Alchemy).len(), kind)
}

fn filled(like: &Params<f64>, value: f64) -> Params<f64> {
    let mut g = like.zeros_like();
    g.for_each_mut(|_, m| m.data_mut().iter_mut().for_each(|x| *x = value));
    g
}

#[test]
fn zero_gradient_leaves_everything_alone() {
    let mut p = params(HistoryKind::Stack);
    let before = p.clone();
    let mut adam = Adam::new(&p, 0.001);
    let g = p.zeros_like();
    assert_eq!(adam.step(&mut p, &g), Ok(false));
    assert_eq!(p, before);
    assert_eq!(adam.step, 0);
}

#[test]
fn non_finite_gradient_is_rejected_without_update() {
    let mut p = params(HistoryKind::Tokens);
    let before = p.clone();
    let mut adam = Adam::new(&p, 0.001);
    let mut g = filled(&p, 0.5);
    g.tensor_mut("out_w").unwrap().data_mut()[0] = f64::NAN;
    assert!(matches!(adam.step(&mut p, &g), Err(OptimError::NonFiniteGradient { .. })));
    assert_eq!(p, before);
}

/// Bias correction makes the first step exactly lr in the gradient's direction.
#[test]
fn first_step_ascends_by_learning_rate() {
    let mut p = params(HistoryKind::Stack);
    let before = p.clone();
    let mut adam = Adam::new(&p, 0.01);
    let g = filled(&p, 2.0);
    assert_eq!(adam.step(&mut p, &g), Ok(true));
    for ((_, a), (_, b)) in p.tensors().into_iter().zip(before.tensors()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y - 0.01).abs() < 1e-8);
        }
    }
}

#[test]
fn checkpoint_round_trips_with_optimizer_state() {
    let mut p = params(HistoryKind::Tokens);
    let mut adam = Adam::new(&p, 0.001);
    let g = filled(&p, -0.25);
    adam.step(&mut p, &g).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    checkpoint::save(&path, &p, Some(&adam)).unwrap();
    let (q, restored) = checkpoint::load::<f64>(&path).unwrap();
    assert_eq!(q, p);
    assert_eq!(restored, Some(adam));

    let (q, none) = checkpoint::from_bytes::<f64>(&checkpoint::to_bytes(&p, None)).unwrap();
    assert_eq!(q, p);
    assert!(none.is_none());
}

#[test]
fn damaged_checkpoints_are_errors() {
    let bytes = checkpoint::to_bytes(&params(HistoryKind::Stack), None);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(checkpoint::from_bytes::<f64>(&bad).is_err());
    assert!(checkpoint::from_bytes::<f64>(&bytes[..bytes.len() / 2]).is_err());
    assert!(checkpoint::from_bytes::<f64>(&[]).is_err());
}

#[test]
fn single_precision_model_tracks_double() {
    let domain = Domain::Scene;
    let raw = generate_synthetic(domain, 1, 6).unwrap();
    let ex = decompose(&raw[0]).remove(0);
    let vocab = Vocabulary::new(domain);
    let p64 = Params::<f64>::init(6, Dims::tiny(), vocab.len(), HistoryKind::Stack);
    let p32 = checkpoint::from_bytes::<f32>(&checkpoint::to_bytes(&p64, None)).unwrap().0;
    let m64 = Model::new(vocab.clone(), WordVectors::random(6, Dims::tiny().word), p64, DEFAULT_BUDGET);
    let m32 = Model::new(vocab, WordVectors::random(6, Dims::tiny().word), p32, DEFAULT_BUDGET);
    for h in sample_eps_greedy(&m64, ex.input(), 10, 1.0, 1).iter().filter(|h| h.is_terminal()) {
        let a = m64.program_log_prob(ex.input(), &h.tokens).unwrap();
        let b = m32.program_log_prob(ex.input(), &h.tokens).unwrap();
        assert!((a - b as f64).abs() < 1e-4 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn gradients_match_finite_differences() {
    let r = gradcheck(17, 3, &[HistoryKind::Tokens, HistoryKind::Stack], Dims::tiny(), 1e-4);
    assert_eq!(r.pairs, 6);
    assert!(r.max_rel_error < 1e-4, "{r:?}");
}
