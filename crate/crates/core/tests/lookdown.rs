use locreg::ibm::PointPopulation;
use locreg::lookdown::{path_position, project, run_lookdown, trace_lineage, LevelledPopulation};
use locreg::model::{Domain, Preset, PresetParams};
use locreg::rng::stream;

#[test]
fn traced_lineages_diffuse_at_the_generator_rate() {
    let sigma2 = 0.5;
    let params = PresetParams { theta: 20.0, sigma2, domain: Domain::interval(0.0, 30.0), ..Preset::Logistic.default_params() };
    let model = Preset::Logistic.model(&params).unwrap();
    let n = 50.0;
    let init = PointPopulation::uniform_1d(1500, 0.0, 30.0, n);
    let (horizon, window) = (4.0, 3.0);
    let mut sq = Vec::new();
    for rep in 0..3 {
        let mut rng = stream(17, rep);
        let mut pop = LevelledPopulation::from_points(&init, params.theta, &mut rng);
        run_lookdown(&mut pop, &model, horizon, 0.002, &mut rng).unwrap();
        assert!(project(&pop).len() > 750);
        for ind in pop.individuals.iter().filter(|i| (10.0..20.0).contains(&i.position[0])) {
            let path = trace_lineage(&pop.log, &pop.labels, pop.log_start, ind.label, &ind.position, pop.time, pop.time - window).unwrap();
            let then = path_position(&path, window)[0];
            sq.push((ind.position[0] - then).powi(2));
        }
    }
    let rate = sq.iter().sum::<f64>() / sq.len() as f64 / window;
    assert!((rate / (2.0 * sigma2) - 1.0).abs() < 0.15, "msd/t = {rate}, expected {}", 2.0 * sigma2);
}

#[test]
fn levels_stay_below_the_ceiling() {
    let params = Preset::Logistic.default_params();
    let model = Preset::Logistic.model(&params).unwrap();
    let init = PointPopulation::uniform_1d(500, 0.0, 10.0, 50.0);
    let mut rng = stream(3, 0);
    let mut pop = LevelledPopulation::from_points(&init, params.theta, &mut rng);
    run_lookdown(&mut pop, &model, 1.0, 0.002, &mut rng).unwrap();
    assert!(pop.levels().iter().all(|&u| (0.0..50.0).contains(&u)));
}
