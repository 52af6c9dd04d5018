//! PSO velocity laws and the epsilon-greedy coefficient schedule.
//!
//! One law covers every planner: inertia plus up to four attraction terms
//! toward the personal best, the group best, the surrogate's maximum
//! uncertainty and its maximum contamination. Planners differ only in which
//! coefficients are non-zero.

use rand::Rng;

use crate::{Error, Result, Vec2};

/// Acceleration coefficients `c1..c4` (personal best, group best, max
/// uncertainty, max contamination).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Coefficients {
    pub const fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        Self { c1, c2, c3, c4 }
    }

    /// Classic PSO, `c1 = c2 = 2`.
    pub const CLASSIC: Self = Self::new(2.0, 2.0, 0.0, 0.0);
    /// Exploration phase: personal best and uncertainty only.
    pub const EXPLORATION: Self = Self::new(2.0187, 0.0, 3.2697, 0.0);
    /// Exploitation phase: personal best, group best and contamination.
    pub const EXPLOITATION: Self = Self::new(3.6845, 1.5614, 0.0, 3.6703);
    /// Exploit arm of the epsilon-greedy planner.
    pub const EPSILON_EXPLOIT: Self = Self::new(3.6845, 1.5614, 0.0, 3.1262);

    pub fn validate(&self) -> Result<()> {
        if [self.c1, self.c2, self.c3, self.c4]
            .iter()
            .all(|c| *c >= 0.0 && c.is_finite())
        {
            Ok(())
        } else {
            Err(Error::Config(format!("negative coefficient in {self:?}")))
        }
    }

    pub fn uses_uncertainty(&self) -> bool {
        self.c3 > 0.0
    }

    pub fn uses_contamination(&self) -> bool {
        self.c4 > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub inertia: f64,
    /// Velocity magnitude cap in cells per iteration.
    pub max_step_cells: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            inertia: 0.7,
            max_step_cells: 2.0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia >= 0.0 && self.inertia.is_finite()) {
            return Err(Error::Config(format!("inertia {}", self.inertia)));
        }
        if !(self.max_step_cells > 0.0 && self.max_step_cells.is_finite()) {
            return Err(Error::Config(format!("max step {}", self.max_step_cells)));
        }
        Ok(())
    }
}

/// Which best a vehicle shares: the whole fleet or one action zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    All,
    Zone(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub pbest_position: Vec2,
    pub pbest_value: f64,
    pub distance_m: f64,
    pub group: Group,
}

impl VehicleState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        Self {
            position,
            velocity,
            pbest_position: position,
            pbest_value: f64::NEG_INFINITY,
            distance_m: 0.0,
            group: Group::All,
        }
    }

    /// Forgets the personal best, e.g. when the vehicle joins a new swarm.
    pub fn reset_pbest(&mut self) {
        self.pbest_position = self.position;
        self.pbest_value = f64::NEG_INFINITY;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupBest {
    pub position: Vec2,
    pub value: f64,
    pub group: Group,
}

impl GroupBest {
    pub fn empty(group: Group) -> Self {
        Self {
            position: Vec2::zeros(),
            value: f64::NEG_INFINITY,
            group,
        }
    }

    pub fn is_set(&self) -> bool {
        self.value > f64::NEG_INFINITY
    }
}

/// Surrogate targets: where the model is most uncertain and where it
/// predicts the most contamination.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Guidance {
    pub max_un: Option<Vec2>,
    pub max_con: Option<Vec2>,
}

/// The four per-step uniform draws `r1..r4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draws(pub [f64; 4]);

impl Draws {
    /// Consumes exactly four uniforms, in term order.
    pub fn sample(rng: &mut impl Rng) -> Self {
        Self([rng.gen(), rng.gen(), rng.gen(), rng.gen()])
    }
}

fn clamp_norm(v: Vec2, max: f64) -> Vec2 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// Enhanced PSO velocity law with explicit draws. Terms with a zero
/// coefficient are skipped, so missing guidance only matters when its
/// coefficient is active.
pub fn velocity_update(
    state: &VehicleState,
    gbest: &GroupBest,
    guidance: &Guidance,
    coeffs: &Coefficients,
    cfg: &SwarmConfig,
    draws: &Draws,
) -> Result<(Vec2, Vec2)> {
    let x = state.position;
    let [r1, r2, r3, r4] = draws.0;
    let mut v = state.velocity * cfg.inertia;
    if coeffs.c1 > 0.0 {
        v += (state.pbest_position - x) * (coeffs.c1 * r1);
    }
    if coeffs.c2 > 0.0 && gbest.is_set() {
        v += (gbest.position - x) * (coeffs.c2 * r2);
    }
    if coeffs.c3 > 0.0 {
        let target = guidance.max_un.ok_or(Error::UnfittedModel)?;
        v += (target - x) * (coeffs.c3 * r3);
    }
    if coeffs.c4 > 0.0 {
        let target = guidance.max_con.ok_or(Error::UnfittedModel)?;
        v += (target - x) * (coeffs.c4 * r4);
    }
    let v = clamp_norm(v, cfg.max_step_cells);
    Ok((v, x + v))
}

/// Classic PSO step: inertia, personal best and group best.
pub fn classic_step(
    state: &VehicleState,
    gbest: &GroupBest,
    coeffs: &Coefficients,
    cfg: &SwarmConfig,
    rng: &mut impl Rng,
) -> (Vec2, Vec2) {
    let draws = Draws::sample(rng);
    let c = Coefficients::new(coeffs.c1, coeffs.c2, 0.0, 0.0);
    velocity_update(state, gbest, &Guidance::default(), &c, cfg, &draws)
        .expect("classic law needs no guidance")
}

/// GP-enhanced step; fails if an active surrogate term has no target.
pub fn enhanced_step(
    state: &VehicleState,
    gbest: &GroupBest,
    guidance: &Guidance,
    coeffs: &Coefficients,
    cfg: &SwarmConfig,
    rng: &mut impl Rng,
) -> Result<(Vec2, Vec2)> {
    let draws = Draws::sample(rng);
    velocity_update(state, gbest, guidance, coeffs, cfg, &draws)
}

/// Updates personal bests from this iteration's readings (strict
/// improvement only) and folds every member's personal best into its group
/// best. Ties keep the current holder. `readings[i] = None` skips vehicle i.
pub fn update_bests(
    states: &mut [VehicleState],
    readings: &[Option<f64>],
    bests: &mut [GroupBest],
) {
    for (s, r) in states.iter_mut().zip(readings) {
        if let Some(v) = *r {
            if v > s.pbest_value {
                s.pbest_value = v;
                s.pbest_position = s.position;
            }
        }
    }
    for best in bests.iter_mut() {
        for s in states.iter().filter(|s| s.group == best.group) {
            if s.pbest_value > best.value {
                best.value = s.pbest_value;
                best.position = s.pbest_position;
            }
        }
    }
}

/// Epsilon-greedy switching between explore and exploit coefficients.
///
/// Epsilon sits at its maximum until `start_m`, drops by `decay` once per
/// control iteration inside the band, and is pinned at its minimum from
/// `end_m` on.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    pub epsilon: f64,
    pub start_m: f64,
    pub end_m: f64,
    pub decay: f64,
    pub explore: Coefficients,
    pub exploit: Coefficients,
}

pub const EPSILON_MAX: f64 = 0.95;
pub const EPSILON_MIN: f64 = 0.05;

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            epsilon: EPSILON_MAX,
            start_m: 6_500.0,
            end_m: 13_500.0,
            decay: 0.13,
            explore: Coefficients::EXPLORATION,
            exploit: Coefficients::EPSILON_EXPLOIT,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_m < self.end_m) {
            return Err(Error::Config(format!(
                "epsilon band [{}, {}] m is empty",
                self.start_m, self.end_m
            )));
        }
        if !(self.decay >= 0.0) {
            return Err(Error::Config(format!("epsilon decay {}", self.decay)));
        }
        self.explore.validate()?;
        self.exploit.validate()
    }

    /// Advances epsilon for the distance travelled so far.
    pub fn advance(&mut self, distance_m: f64) -> f64 {
        self.epsilon = if distance_m <= self.start_m {
            EPSILON_MAX
        } else if distance_m >= self.end_m {
            EPSILON_MIN
        } else {
            (self.epsilon - self.decay).max(EPSILON_MIN)
        };
        self.epsilon
    }

    /// Picks a coefficient set for a given draw `val`.
    pub fn choose(&self, val: f64) -> Coefficients {
        if self.epsilon >= val {
            self.explore
        } else {
            self.exploit
        }
    }

    /// One control iteration: advance epsilon, draw `val`, choose.
    pub fn coefficients(&mut self, distance_m: f64, rng: &mut impl Rng) -> Coefficients {
        self.advance(distance_m);
        let val: f64 = rng.gen();
        self.choose(val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn state(x: Vec2, v: Vec2, pbest: Vec2) -> VehicleState {
        VehicleState {
            pbest_position: pbest,
            pbest_value: 0.5,
            ..VehicleState::new(x, v)
        }
    }

    fn gbest_at(p: Vec2) -> GroupBest {
        GroupBest {
            position: p,
            value: 1.0,
            group: Group::All,
        }
    }

    fn unclamped(w: f64) -> SwarmConfig {
        SwarmConfig {
            inertia: w,
            max_step_cells: 1e9,
        }
    }

    #[test]
    fn zero_coefficients_freeze_vehicle() {
        let s = state(
            Vec2::new(3.0, 4.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(9.0, 9.0),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (v, x) = classic_step(
            &s,
            &gbest_at(Vec2::new(0.0, 0.0)),
            &Coefficients::new(0.0, 0.0, 0.0, 0.0),
            &unclamped(0.0),
            &mut rng,
        );
        assert_eq!(v, Vec2::zeros());
        assert_eq!(x, s.position);
    }

    #[test]
    fn pure_inertia_keeps_velocity() {
        let s = state(
            Vec2::new(3.0, 4.0),
            Vec2::new(0.5, -0.25),
            Vec2::new(3.0, 4.0),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (v, _) = classic_step(
            &s,
            &gbest_at(Vec2::new(7.0, 7.0)),
            &Coefficients::new(2.0, 0.0, 0.0, 0.0),
            &unclamped(1.0),
            &mut rng,
        );
        assert_eq!(v, s.velocity);
    }

    #[test]
    fn classic_law_by_hand() {
        // 0.7*(1,0) + 2*0.5*((2,0)-(0,0)) + 2*0.5*((0,2)-(0,0)) = (2.7, 2)
        let s = state(Vec2::zeros(), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0));
        let (v, x) = velocity_update(
            &s,
            &gbest_at(Vec2::new(0.0, 2.0)),
            &Guidance::default(),
            &Coefficients::new(2.0, 2.0, 0.0, 0.0),
            &unclamped(0.7),
            &Draws([0.5, 0.5, 0.5, 0.5]),
        )
        .unwrap();
        assert!((v - Vec2::new(2.7, 2.0)).norm() < 1e-12);
        assert_eq!(x, v);
        // the default clamp caps the same move at 2 cells
        let (v, _) = velocity_update(
            &s,
            &gbest_at(Vec2::new(0.0, 2.0)),
            &Guidance::default(),
            &Coefficients::new(2.0, 2.0, 0.0, 0.0),
            &SwarmConfig::default(),
            &Draws([0.5, 0.5, 0.5, 0.5]),
        )
        .unwrap();
        assert!((v.norm() - 2.0).abs() < 1e-12);
        assert!((v.normalize() - Vec2::new(2.7, 2.0).normalize()).norm() < 1e-12);
    }

    #[test]
    fn uncertainty_only_points_at_max_un() {
        let s = state(Vec2::new(1.0, 1.0), Vec2::zeros(), Vec2::new(1.0, 1.0));
        let g = Guidance {
            max_un: Some(Vec2::new(4.0, 5.0)),
            max_con: Some(Vec2::new(-9.0, -9.0)),
        };
        let (v, _) = velocity_update(
            &s,
            &gbest_at(Vec2::new(-5.0, 0.0)),
            &g,
            &Coefficients::new(0.0, 0.0, 1.5, 0.0),
            &unclamped(0.7),
            &Draws([1.0; 4]),
        )
        .unwrap();
        assert!((v - Vec2::new(4.5, 6.0)).norm() < 1e-12);
    }

    #[test]
    fn exploration_ignores_gbest_and_max_con() {
        let s = state(
            Vec2::new(1.0, 1.0),
            Vec2::new(0.2, 0.1),
            Vec2::new(2.0, 1.0),
        );
        let g1 = Guidance {
            max_un: Some(Vec2::new(4.0, 5.0)),
            max_con: Some(Vec2::new(-9.0, -9.0)),
        };
        let g2 = Guidance {
            max_con: Some(Vec2::new(30.0, 2.0)),
            ..g1
        };
        let d = Draws([0.3, 0.9, 0.4, 0.8]);
        let c = Coefficients::EXPLORATION;
        let cfg = SwarmConfig::default();
        let a = velocity_update(&s, &gbest_at(Vec2::new(-5.0, 0.0)), &g1, &c, &cfg, &d).unwrap();
        let b = velocity_update(&s, &gbest_at(Vec2::new(50.0, 7.0)), &g2, &c, &cfg, &d).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn four_terms_by_hand() {
        let s = state(
            Vec2::new(1.0, 2.0),
            Vec2::new(9.0, 9.0),
            Vec2::new(2.0, 2.0),
        );
        let g = Guidance {
            max_un: Some(Vec2::new(1.0, 5.0)),
            max_con: Some(Vec2::new(0.0, 0.0)),
        };
        let (v, _) = velocity_update(
            &s,
            &gbest_at(Vec2::new(4.0, 6.0)),
            &g,
            &Coefficients::new(1.0, 2.0, 3.0, 4.0),
            &unclamped(0.0),
            &Draws([1.0; 4]),
        )
        .unwrap();
        // 1*(1,0) + 2*(3,4) + 3*(0,3) + 4*(-1,-2) = (3, 9)
        assert!((v - Vec2::new(3.0, 9.0)).norm() < 1e-12);
    }

    #[test]
    fn missing_guidance_is_an_error() {
        let s = state(Vec2::zeros(), Vec2::zeros(), Vec2::zeros());
        let r = velocity_update(
            &s,
            &GroupBest::empty(Group::All),
            &Guidance::default(),
            &Coefficients::EXPLOITATION,
            &SwarmConfig::default(),
            &Draws([0.5; 4]),
        );
        assert!(matches!(r, Err(Error::UnfittedModel)));
    }

    #[test]
    fn bests_follow_strict_improvement() {
        let mut states = vec![
            state(Vec2::new(0.0, 0.0), Vec2::zeros(), Vec2::new(5.0, 5.0)),
            state(Vec2::new(1.0, 1.0), Vec2::zeros(), Vec2::new(6.0, 6.0)),
        ];
        let mut bests = [GroupBest::empty(Group::All)];
        // equal reading keeps the old pbest position
        update_bests(&mut states, &[Some(0.5), Some(0.3)], &mut bests);
        assert_eq!(states[0].pbest_position, Vec2::new(5.0, 5.0));
        assert_eq!(states[1].pbest_value, 0.5);
        assert_eq!(bests[0].value, 0.5);
        assert_eq!(bests[0].position, Vec2::new(5.0, 5.0));
        update_bests(&mut states, &[Some(0.3), Some(0.7)], &mut bests);
        assert_eq!(states[1].pbest_value, 0.7);
        assert_eq!(states[1].pbest_position, Vec2::new(1.0, 1.0));
        assert_eq!(bests[0].value, 0.7);
    }

    #[test]
    fn single_member_group_best_is_its_pbest() {
        let mut states = vec![
            VehicleState::new(Vec2::new(1.0, 1.0), Vec2::zeros()),
            VehicleState::new(Vec2::new(2.0, 2.0), Vec2::zeros()),
        ];
        states[0].group = Group::Zone(0);
        states[1].group = Group::Zone(1);
        let mut bests = [
            GroupBest::empty(Group::Zone(0)),
            GroupBest::empty(Group::Zone(1)),
        ];
        update_bests(&mut states, &[Some(0.2), Some(0.9)], &mut bests);
        assert_eq!(bests[0].value, 0.2);
        assert_eq!(bests[0].position, states[0].pbest_position);
        assert_eq!(bests[1].value, 0.9);
    }

    #[test]
    fn epsilon_schedule_edges() {
        let mut s = EpsilonSchedule::default();
        assert_eq!(s.advance(0.0), 0.95);
        assert_eq!(s.advance(6_500.0), 0.95);
        assert!((s.advance(7_000.0) - 0.82).abs() < 1e-12);
        assert_eq!(s.advance(14_000.0), 0.05);
        assert_eq!(s.choose(0.5), Coefficients::EPSILON_EXPLOIT);
        let mut s = EpsilonSchedule::default();
        s.advance(0.0);
        assert_eq!(s.choose(0.5), Coefficients::EXPLORATION);
        assert_eq!(s.choose(0.95), Coefficients::EXPLORATION);
        assert_eq!(s.choose(0.951), Coefficients::EPSILON_EXPLOIT);
    }

    #[test]
    fn epsilon_reaches_floor_inside_band() {
        let mut s = EpsilonSchedule::default();
        let mut last = s.advance(0.0);
        for k in 0..20 {
            let e = s.advance(7_000.0 + k as f64);
            assert!(e <= last);
            last = e;
        }
        assert_eq!(last, EPSILON_MIN);
    }

    proptest! {
        #[test]
        fn speed_is_clamped(
            vx in -50.0f64..50.0, vy in -50.0f64..50.0,
            px in -50.0f64..50.0, py in -50.0f64..50.0,
            r in prop::array::uniform4(0.0f64..1.0),
        ) {
            let s = state(Vec2::new(1.0, 1.0), Vec2::new(vx, vy), Vec2::new(px, py));
            let g = Guidance { max_un: Some(Vec2::new(-px, py)), max_con: Some(Vec2::new(py, px)) };
            let (v, x) = velocity_update(&s, &gbest_at(Vec2::new(px, -py)), &g,
                &Coefficients::new(2.0, 1.0, 3.0, 4.0), &SwarmConfig::default(), &Draws(r)).unwrap();
            prop_assert!(v.norm() <= 2.0 + 1e-12);
            prop_assert_eq!(x, s.position + v);
        }

        #[test]
        fn cognitive_only_moves_toward_pbest(
            px in -20.0f64..20.0, py in -20.0f64..20.0, r1 in 0.0f64..1.0,
        ) {
            let s = state(Vec2::new(1.0, -2.0), Vec2::new(3.0, 3.0), Vec2::new(px, py));
            let (v, _) = velocity_update(&s, &gbest_at(Vec2::new(9.0, 9.0)), &Guidance::default(),
                &Coefficients::new(1.7, 0.0, 0.0, 0.0), &unclamped(0.0), &Draws([r1, 0.5, 0.5, 0.5])).unwrap();
            let d = s.pbest_position - s.position;
            let cross = d.x * v.y - d.y * v.x;
            prop_assert!(cross.abs() <= 1e-9 * (1.0 + d.norm() * v.norm()));
            prop_assert!(v.dot(&d) >= 0.0);
        }

        #[test]
        fn epsilon_monotone_in_range(steps in prop::collection::vec(0.0f64..500.0, 1..60), seed in 0u64..100) {
            let mut s = EpsilonSchedule::default();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut d = 0.0;
            let mut last = f64::INFINITY;
            for inc in steps {
                d += inc;
                s.coefficients(d, &mut rng);
                prop_assert!(s.epsilon <= last);
                prop_assert!((EPSILON_MIN..=EPSILON_MAX).contains(&s.epsilon));
                last = s.epsilon;
            }
        }
    }
}
