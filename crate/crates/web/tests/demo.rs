use gossip_web::{rate_profile, speedup_table, GossipDemo, MAX_PROFILE_EDGES};

#[test]
fn stepping_reaches_consensus_and_keeps_the_mean() {
    for engine in ["primal", "dual"] {
        let mut demo = GossipDemo::new("grid:3x3", "tau:3", engine, 1).unwrap();
        assert_eq!(demo.num_nodes(), 9);
        assert_eq!(demo.edges().len(), 2 * 12);
        while demo.relative_error() >= 1e-6 {
            let chosen = demo.step().unwrap();
            assert_eq!(chosen.len(), 3);
            assert_eq!(chosen, demo.selected());
            let mean = demo.values().iter().sum::<f64>() / 9.0;
            assert!((mean - demo.target()).abs() < 1e-10);
        }
        assert!(demo.iterations() > 0.0);
    }
}

#[test]
fn dual_exposes_weights_and_advice() {
    let mut demo = GossipDemo::new("ring:6", "pairwise", "dual", 2).unwrap();
    let mut last = demo.dual_objective().unwrap();
    for _ in 0..50 {
        demo.step().unwrap();
        let d = demo.dual_objective().unwrap();
        assert!(d >= last - 1e-12);
        last = d;
    }
    assert_eq!(demo.edge_weights().len(), 6);
    let values = demo.values();
    for (i, a) in demo.advice().iter().enumerate() {
        assert!((values[i] - (i as f64 + a)).abs() < 1e-12);
    }

    let primal = GossipDemo::new("ring:6", "pairwise", "primal", 2).unwrap();
    assert!(primal.advice().is_empty() && primal.dual_objective().is_none());
}

#[test]
fn layouts_stay_in_the_unit_square() {
    for spec in ["ring:7", "grid:2x5", "path:4", "complete:5"] {
        let demo = GossipDemo::new(spec, "all", "primal", 0).unwrap();
        let pos = demo.positions();
        assert_eq!(pos.len(), 2 * demo.num_nodes());
        assert!(pos.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

#[test]
fn bad_inputs_are_reported() {
    assert!(GossipDemo::new("file:/etc/hosts", "pairwise", "primal", 0).is_err());
    assert!(GossipDemo::new("ring:6", "tau:9", "primal", 0).is_err());
    assert!(GossipDemo::new("ring:6", "pairwise", "sideways", 0).is_err());
    assert!(rate_profile("grid:4x4").is_err());
    assert!(speedup_table("ring:6", 3, 0).is_err());
}

#[test]
fn triangle_profile() {
    let rows = rate_profile("complete:3").unwrap();
    assert_eq!(rows.len(), 9);
    assert!((rows[1] - 0.5).abs() < 1e-10 && (rows[2] - 2.0).abs() < 1e-9);
    assert_eq!(&rows[3..5], &[2.0, 0.0]);
    assert!(rate_profile("grid:3x3").unwrap().len() == 3 * 12 && 12 <= MAX_PROFILE_EDGES);
}

#[test]
fn speedup_rows() {
    let rows = speedup_table("ring:12", 20, 0).unwrap();
    let taus: Vec<f64> = rows.chunks(3).map(|r| r[0]).collect();
    assert_eq!(taus, [1.0, 2.0, 4.0, 8.0, 12.0]);
    assert_eq!(rows[1], rows[2]);
    assert_eq!(rows[rows.len() - 2], 1.0);
}
