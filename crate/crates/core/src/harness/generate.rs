use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scenario;
use crate::cbs::PlannerParams;
use crate::error::{Error, Result};
use crate::geometry::{in_collision_pair, is_valid_config, Aabb, Configuration, Environment, RobotModel, Vec2};

/// Free area per robot used by the crossing generator when none is given.
pub const DEFAULT_CROSSING_DENSITY: f64 = 16.0;
pub const DEFAULT_CROSSING_RADIUS: f64 = 0.5;

/// Square open room; half the robots cross left to right, the other half
/// bottom to top. The room's area is `num_agents * density`, so the free
/// area per robot does not depend on the team size. Lanes are evenly spaced
/// between the start strips; the seed jitters them by up to a tenth of their
/// spacing and becomes the planner seed.
pub fn gen_crossing(num_agents: usize, radius: f64, density: f64, seed: u64) -> Result<Scenario> {
    if num_agents < 2 || !num_agents.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "crossing needs an even number of agents (at least 2), got {num_agents}"
        )));
    }
    if !(radius > 0.0 && density > 0.0) {
        return Err(Error::InvalidParameter("radius and density must be positive".into()));
    }
    let side = (num_agents as f64 * density).sqrt();
    let half = num_agents / 2;
    let margin = 1.5 * radius;
    // Lanes stay clear of the strips the perpendicular robots start and end in.
    let band = 3.0 * radius;
    let spacing = (side - 2.0 * band) / (half as f64 + 1.0);
    if spacing < 2.5 * radius {
        return Err(Error::InvalidParameter(format!(
            "density {density} is too high for radius {radius}"
        )));
    }
    let env = Environment::open(side, side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = || rng.gen_range(-0.1..=0.1) * spacing;
    let mut robots = Vec::new();
    let mut starts = Vec::new();
    let mut goals = Vec::new();
    for k in 0..half {
        let lane = band + spacing * (k as f64 + 1.0);
        robots.push(RobotModel::disk(robots.len(), radius, 1.0)?);
        starts.push(Configuration::xy(margin, lane + jitter()));
        goals.push(Configuration::xy(side - margin, lane + jitter()));
    }
    for k in 0..half {
        let lane = band + spacing * (k as f64 + 1.0);
        robots.push(RobotModel::disk(robots.len(), radius, 1.0)?);
        starts.push(Configuration::xy(lane + jitter(), margin));
        goals.push(Configuration::xy(lane + jitter(), side - margin));
    }
    let s = Scenario {
        name: format!("crossing-{num_agents}-s{seed}"),
        env,
        robots,
        starts,
        goals,
        params: PlannerParams {
            seed,
            ..PlannerParams::default()
        },
    };
    s.validate()?;
    if let Some(reason) = s.unsolvable_reason()? {
        return Err(Error::Validation(format!("generated crossing is unsolvable: {reason}")));
    }
    Ok(s)
}

pub const ARM_LINK_LENGTH: f64 = 1.0;
pub const ARM_LINK_WIDTH: f64 = 0.2;

/// Planar arms with bases evenly spaced on a circle. Start poses reach
/// inward so the arms nearly touch around the centre; goal poses are folded
/// outward. Jittered start poses are redrawn until the arms are pairwise
/// collision-free, up to 1000 attempts.
pub fn gen_arms(num_arms: usize, links: usize, seed: u64) -> Result<Scenario> {
    if num_arms < 2 || links < 2 {
        return Err(Error::InvalidParameter(format!(
            "arms needs at least 2 arms and 2 links, got {num_arms} and {links}"
        )));
    }
    let reach = links as f64 * ARM_LINK_LENGTH;
    // Tips stop short of the centre by a fixed clearance.
    let ring = reach + 0.35;
    let extent = ring + reach + ARM_LINK_WIDTH + 0.5;
    let env = Environment::new(Aabb::new(Vec2::new(-extent, -extent), Vec2::new(extent, extent)), Vec::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robots: Vec<RobotModel> = (0..num_arms)
        .map(|i| {
            let phi = TAU * i as f64 / num_arms as f64;
            RobotModel::chain(
                i,
                Vec2::from_angle(phi) * ring,
                vec![ARM_LINK_LENGTH; links],
                ARM_LINK_WIDTH,
                1.0,
            )
        })
        .collect::<Result<_>>()?;
    let inward = |i: usize| normalize(TAU * i as f64 / num_arms as f64 + PI);
    let outward = |i: usize| normalize(TAU * i as f64 / num_arms as f64);

    let pairwise_free = |qs: &[Configuration]| -> Result<bool> {
        for i in 0..num_arms {
            for j in i + 1..num_arms {
                if in_collision_pair(&robots[i], &qs[i], &robots[j], &qs[j])? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };

    let mut starts = None;
    for _ in 0..1000 {
        let qs: Vec<Configuration> = (0..num_arms)
            .map(|i| {
                let mut v = vec![normalize(inward(i) + rng.gen_range(-0.25..0.25))];
                v.extend((1..links).map(|_| rng.gen_range(-0.3..0.3)));
                Configuration::new(v)
            })
            .collect();
        let valid = qs
            .iter()
            .zip(&robots)
            .map(|(q, r)| is_valid_config(&env, r, q))
            .collect::<Result<Vec<bool>>>()?;
        if valid.iter().all(|&v| v) && pairwise_free(&qs)? {
            starts = Some(qs);
            break;
        }
    }
    let starts = starts.ok_or_else(|| Error::Validation("no valid interleaved start found in 1000 attempts".into()))?;
    let goals: Vec<Configuration> = (0..num_arms)
        .map(|i| {
            let fold = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut v = vec![normalize(outward(i) + rng.gen_range(-0.2..0.2))];
            v.extend((1..links).map(|_| fold * rng.gen_range(0.6..1.0)));
            Configuration::new(v)
        })
        .collect();
    for (i, q) in goals.iter().enumerate() {
        if !is_valid_config(&env, &robots[i], q)? {
            return Err(Error::Validation(format!("robot {i}: folded goal is invalid")));
        }
    }
    if !pairwise_free(&goals)? {
        return Err(Error::Validation("folded goals collide".into()));
    }
    Ok(Scenario {
        name: format!("arms-{num_arms}x{links}-s{seed}"),
        env,
        robots,
        starts,
        goals,
        params: PlannerParams {
            seed,
            ..PlannerParams::default()
        },
    })
}

fn normalize(a: f64) -> f64 {
    crate::geometry::normalize_angle(a)
}
