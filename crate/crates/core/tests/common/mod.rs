#![allow(dead_code)]

use std::path::PathBuf;

use alc::netmodel::{Area, Bus, Line, PowerNetwork};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Random connected multi-area network whose areas are internally connected.
/// Returns the network with a feasible disturbance already in `p_in`.
pub fn random_network(seed: u64, bus_range: (usize, usize), max_areas: usize, tight: bool) -> PowerNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(bus_range.0..=bus_range.1);
    let areas = rng.random_range(1..=max_areas.min(n / 2).max(1));
    // contiguous blocks of at least two buses
    let mut sizes = vec![2usize; areas];
    for _ in 0..(n - 2 * areas) {
        let k = rng.random_range(0..areas);
        sizes[k] += 1;
    }
    let mut area_of = Vec::new();
    for (a, &s) in sizes.iter().enumerate() {
        area_of.extend(std::iter::repeat_n(a + 1, s));
    }
    let limit = |rng: &mut ChaCha8Rng| rng.random_range(0.2..0.6);
    let mut buses: Vec<Bus> = (0..n)
        .map(|i| {
            let id = i + 1;
            let area = area_of[i];
            let damping = rng.random_range(0.5..1.5);
            let b = if rng.random_bool(0.4) {
                Bus::generator(id, area, rng.random_range(1.0..4.0), damping)
            } else {
                Bus::load(id, area, damping)
            };
            let l = limit(&mut rng);
            b.with_cost(rng.random_range(0.5..2.0), -l, l)
        })
        .collect();
    if !buses.iter().any(|b| b.is_generator()) {
        let b = &buses[0];
        buses[0] = Bus::generator(1, b.area, 2.0, b.damping).with_cost(b.theta.unwrap(), b.d_min.unwrap(), b.d_max.unwrap());
    }
    let mut lines = Vec::new();
    let mut has = std::collections::HashSet::new();
    let mut add = |lines: &mut Vec<Line>, i: usize, j: usize, rng: &mut ChaCha8Rng| {
        if i == j || has.contains(&(i.min(j), i.max(j))) {
            return;
        }
        has.insert((i.min(j), i.max(j)));
        let (f, t) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
        lines.push(Line::new(f, t, rng.random_range(1.0..4.0)));
    };
    let mut start = 1;
    let mut firsts = Vec::new();
    for &s in &sizes {
        let members: Vec<usize> = (start..start + s).collect();
        firsts.push(members.clone());
        for k in 1..s {
            let j = members[rng.random_range(0..k)];
            add(&mut lines, members[k], j, &mut rng);
        }
        for _ in 0..rng.random_range(0..=s / 2) {
            let a = members[rng.random_range(0..s)];
            let b = members[rng.random_range(0..s)];
            add(&mut lines, a, b, &mut rng);
        }
        start += s;
    }
    for a in 1..areas {
        let other = rng.random_range(0..a);
        let i = firsts[a][rng.random_range(0..firsts[a].len())];
        let j = firsts[other][rng.random_range(0..firsts[other].len())];
        add(&mut lines, i, j, &mut rng);
    }
    // thermal limits on some internal lines
    for l in lines.iter_mut() {
        if area_of[l.from - 1] == area_of[l.to - 1] && rng.random_bool(0.3) {
            let cap = rng.random_range(0.1..0.5);
            *l = l.clone().with_limits(-cap, cap);
        }
    }
    // disturbance from a strictly feasible point: P_in = d0 + S psi0 with d0
    // inside the load box and every virtual flow inside its limit
    let fill = if tight { rng.random_range(0.7..0.95) } else { rng.random_range(0.1..0.4) };
    let d0: Vec<f64> = buses
        .iter()
        .map(|b| fill * b.d_max.unwrap() * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut psi0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.2)).collect();
    let internal: Vec<&Line> = lines.iter().filter(|l| area_of[l.from - 1] == area_of[l.to - 1]).collect();
    let worst = internal
        .iter()
        .map(|l| (l.b * (psi0[l.from - 1] - psi0[l.to - 1])).abs() / l.upper().min(1.0))
        .fold(0.0_f64, f64::max);
    if worst > 0.0 {
        let shrink = fill / worst;
        psi0.iter_mut().for_each(|x| *x *= shrink);
    }
    for b in buses.iter_mut() {
        b.p_in = d0[b.id - 1];
    }
    for l in &internal {
        let f = l.b * (psi0[l.from - 1] - psi0[l.to - 1]);
        buses[l.from - 1].p_in += f;
        buses[l.to - 1].p_in -= f;
    }
    let area_list = (1..=areas)
        .map(|a| Area {
            id: a,
            buses: (1..=n).filter(|&i| area_of[i - 1] == a).collect(),
        })
        .collect();
    PowerNetwork::new(buses, lines, area_list, 100.0)
}
