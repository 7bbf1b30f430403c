use adclust_core::adclust::{pass1_labeled, pass3_global, AdclustParams, Region};
use adclust_core::grid::{build_grid, thresholds};
use adclust_core::kernel::{KernelClassifier, Weighting};
use adclust_core::synthetic::{generate, simulation, ComponentClass, MixtureSpec, Component};
use adclust_core::{adclust, adclust_with, Dataset, Error, Execution, Label, Stage};

fn sim(name: &str, seed: u64) -> adclust_core::synthetic::Generated {
    generate(&simulation(name, seed).unwrap()).unwrap()
}

fn params(k: f64) -> AdclustParams {
    AdclustParams { k, alpha: 0.6, ..Default::default() }
}

#[test]
fn simulation_one_structure() {
    let g = sim("sim1", 0);
    let r = adclust(&g.data, &params(10.0)).unwrap();
    let c = &r.composition;
    assert_eq!(c.global_clusters.len(), 1);
    assert!(c.count(Region::NormalCore) > 0);
    assert!(c.count(Region::AbnormalRegion) > 0);
    assert!(c.count(Region::MixedOverlap) > 0);
    assert_eq!(r.walls.len(), 1);
    let mean = &r.walls[0].wall.stats.mean;
    assert!(mean[0].abs() < 0.4 && (mean[1] + 1.0).abs() < 0.4, "{mean:?}");
}

#[test]
fn regions_partition_and_respect_clusters() {
    let g = sim("sim3", 2);
    let r = adclust(&g.data, &params(30.0)).unwrap();
    let c = &r.composition;
    let total: usize = Region::ALL.iter().map(|&x| c.count(x)).sum();
    assert_eq!(total, g.data.len());
    for p in 0..g.data.len() {
        match c.regions[p] {
            Region::Outlier => assert!(c.global_of_point[p].is_none()),
            _ => assert!(c.global_of_point[p].is_some()),
        }
    }
    for p in r.protected() {
        assert!(r.inside_wall[p] && c.regions[p] == Region::NormalCore);
    }
}

#[test]
fn larger_weight_labels_more_points() {
    let g = sim("sim1", 3);
    let labeled = |k| {
        let r = adclust(&g.data, &params(k)).unwrap();
        r.composition.count(Region::NormalCore) + r.composition.count(Region::AbnormalRegion)
    };
    assert!(labeled(20.0) > labeled(10.0));
}

#[test]
fn tiny_weight_leaves_everything_unlabeled() {
    let g = sim("sim1", 1);
    let p = params(1e-9);
    let grid = build_grid(&g.data, p.target_fraction).unwrap();
    let (th, prof) = thresholds(&grid, &g.data, p.coef_rt, p.coef_dt, p.log_base, p.density_mode, Execution::Parallel).unwrap();
    let clf = KernelClassifier::fit(&g.data, None).unwrap();
    let w = Weighting::compute(&g.data, &clf, p.k, Execution::Parallel).unwrap();
    let p1 = pass1_labeled(&g.data, &prof.density.point, &th, &w, true, Execution::Parallel);
    assert!(p1.normal.is_empty() && p1.abnormal.is_empty());
    assert_eq!(p1.remaining.len(), g.data.len());
}

#[test]
fn separated_blobs_give_one_subcluster_each() {
    let blob = |x: f64, class| Component { mean: vec![x, 0.0], covariance: vec![vec![0.1, 0.0], vec![0.0, 0.1]], count: 200, class };
    let spec = MixtureSpec {
        components: vec![blob(0.0, ComponentClass::Normal), blob(10.0, ComponentClass::Abnormal)],
        label_fraction: 0.05,
        seed: 4,
    };
    let g = generate(&spec).unwrap();
    let r = adclust(&g.data, &params(30.0)).unwrap();
    assert_eq!(r.pass1.normal.len(), 1);
    assert_eq!(r.pass1.abnormal.len(), 1);
    assert!(r.pass1.normal[0].members.iter().all(|&p| g.truth[p] == ComponentClass::Normal));
    assert!(r.pass1.abnormal[0].members.iter().all(|&p| g.truth[p] == ComponentClass::Abnormal));
    assert!(r.pass1.remaining.len() < 40);
    assert_eq!(r.composition.global_clusters.len(), 2);
    assert_eq!(r.composition.count(Region::MixedOverlap), 0);
}

#[test]
fn global_pass_ignores_labels() {
    let g = sim("sim2", 5);
    let p = params(10.0);
    let unlabeled = g.data.clone().with_labels(vec![Label::Unlabeled; g.data.len()]).unwrap();
    let run = |d: &Dataset| {
        let grid = build_grid(d, p.target_fraction).unwrap();
        let (th, prof) = thresholds(&grid, d, p.coef_rt, p.coef_dt, p.log_base, p.density_mode, Execution::Parallel).unwrap();
        pass3_global(d, &prof.density.point, &th, Execution::Parallel)
    };
    assert_eq!(run(&g.data), run(&unlabeled));
}

#[test]
fn only_normal_labels_is_a_weighting_error() {
    let g = sim("sim1", 0);
    let labels = g.data.labels().iter().map(|&l| if l == Label::Abnormal { Label::Normal } else { l }).collect();
    let d = g.data.clone().with_labels(labels).unwrap();
    match adclust(&d, &params(10.0)) {
        Err(Error::Stage { stage: Stage::Weighting, source }) => assert!(matches!(*source, Error::InsufficientLabels)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn weight_sweep_shrinks_unlabeled_area() {
    let g = sim("sim1", 7);
    let counts: Vec<usize> = [1.0, 10.0, 30.0, 50.0, 100.0]
        .iter()
        .map(|&k| {
            let r = adclust(&g.data, &params(k)).unwrap();
            r.composition.count(Region::MixedOverlap) + r.composition.count(Region::Outlier)
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
}

#[test]
fn execution_modes_agree() {
    let g = sim("sim3", 8);
    let p = AdclustParams { wall_kind: adclust_core::WallKind::Manhattan, eta_samples: 20_000, ..params(30.0) };
    let a = adclust_with(&g.data, &p, Execution::Sequential).unwrap();
    let b = adclust_with(&g.data, &p, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
