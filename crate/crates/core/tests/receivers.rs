use nrdcsk::receivers::ReceiverKind;
use nrdcsk::sim::{run_sweep_detailed, SimConfig};

// 1000 blocks of 100 bits at Eb/N0 = 20 dB, plain vs wpd on identical blocks.
fn plain_vs_wpd(tweak: impl FnOnce(&mut SimConfig)) -> (f64, f64) {
    let mut c = SimConfig::default();
    c.system.n_trials = 1000;
    c.sweep.ebn0_db = vec![20.0];
    c.sweep.jsr_db = vec![10.0];
    c.sweep.receivers = vec![ReceiverKind::Plain, ReceiverKind::Wpd];
    tweak(&mut c);
    let result = run_sweep_detailed(&c).unwrap();
    let ber = |r| result.point(r, 20.0, 10.0).unwrap().ber;
    (ber(ReceiverKind::Plain), ber(ReceiverKind::Wpd))
}

#[test]
fn wpd_costs_little_without_jamming() {
    let (plain, wpd) = plain_vs_wpd(|c| c.jammer.enabled = false);
    eprintln!("jam-free: plain {plain:.5} wpd {wpd:.5}");
    assert!(wpd <= 1.5 * plain, "plain {plain} wpd {wpd}");
}

#[test]
fn wpd_beats_plain_against_in_band_tone() {
    let (plain, wpd) = plain_vs_wpd(|c| {
        c.jammer.f_start_norm = 2.0 * c.system.beta as f64 * 0.04;
        c.jammer.delta_f_norm = 0.0;
    });
    eprintln!("tone at 0.04: plain {plain:.5} wpd {wpd:.5}");
    assert!(wpd < plain, "plain {plain} wpd {wpd}");
}
