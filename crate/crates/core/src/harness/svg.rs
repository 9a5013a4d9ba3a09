use std::fmt::Write as _;
use std::path::Path;

use super::Scenario;
use crate::cbs::SolutionRecord;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, RobotKind, RobotModel, Vec2};

/// Distinct stroke colour for agent `i`: hues spaced by the golden angle.
pub fn agent_color(i: usize) -> String {
    let hue = (i as f64 * 137.507_764) % 360.0;
    format!("hsl({hue:.1},70%,45%)")
}

fn pts(ps: &[Vec2]) -> String {
    ps.iter().map(|p| format!("{:.4},{:.4}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

/// Outline points of the robot at `q`: the placed polygon, the chain's
/// joint polyline, or a single centre point for disks.
fn outline(robot: &RobotModel, q: &Configuration) -> Vec<Vec2> {
    match &robot.kind {
        RobotKind::Disk { .. } => vec![Vec2::new(q.values()[0], q.values()[1])],
        RobotKind::Polygon { vertices } => {
            let o = Vec2::new(q.values()[0], q.values()[1]);
            vertices.iter().map(|&v| v + o).collect()
        }
        RobotKind::Chain { .. } => robot.chain_points(q),
    }
}

/// The point traced for a trajectory: the centre for translating robots,
/// the tip for chains.
fn tracer(robot: &RobotModel, q: &Configuration) -> Vec2 {
    if robot.is_chain() {
        *robot.chain_points(q).last().unwrap()
    } else {
        Vec2::new(q.values()[0], q.values()[1])
    }
}

fn pose(out: &mut String, robot: &RobotModel, q: &Configuration, color: &str, class: &str) {
    let dash = if class == "goal" { " stroke-dasharray=\"0.15 0.1\"" } else { "" };
    match &robot.kind {
        RobotKind::Disk { radius } => {
            let c = tracer(robot, q);
            writeln!(
                out,
                r#"  <circle class="{class}" cx="{:.4}" cy="{:.4}" r="{radius}" fill="none" stroke="{color}" stroke-width="0.06"{dash}/>"#,
                c.x, c.y
            )
        }
        RobotKind::Polygon { .. } => writeln!(
            out,
            r#"  <polygon class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="0.06"{dash}/>"#,
            pts(&outline(robot, q))
        ),
        RobotKind::Chain { width, .. } => writeln!(
            out,
            r#"  <polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="{width}" stroke-linecap="round" stroke-opacity="0.6"{dash}/>"#,
            pts(&outline(robot, q))
        ),
    }
    .unwrap();
}

/// SVG drawing of the scenario and, if given, every agent's discretized
/// trajectory as one polyline.
pub fn svg_string(s: &Scenario, solution: Option<&SolutionRecord>) -> Result<String> {
    if let Some(sol) = solution {
        if sol.trajectories.len() != s.robots.len() {
            return Err(Error::InvalidParameter(format!(
                "solution has {} agents, scenario has {}",
                sol.trajectories.len(),
                s.robots.len()
            )));
        }
        for (robot, traj) in s.robots.iter().zip(&sol.trajectories) {
            for q in traj {
                robot.check_dof(q)?;
            }
        }
    }
    let b = &s.env.bounds;
    let pad = 0.05 * b.width().max(b.height());
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.4} {:.4} {:.4} {:.4}" width="800" height="{:.0}">"#,
        b.min.x - pad,
        -(b.max.y + pad),
        b.width() + 2.0 * pad,
        b.height() + 2.0 * pad,
        800.0 * (b.height() + 2.0 * pad) / (b.width() + 2.0 * pad)
    )
    .unwrap();
    writeln!(out, "  <title>{}</title>", escape(&s.name)).unwrap();
    // World y points up; flip once for everything drawn below.
    writeln!(out, r#"  <g transform="scale(1,-1)">"#).unwrap();
    writeln!(
        out,
        r#"  <rect class="bounds" x="{}" y="{}" width="{}" height="{}" fill="white" stroke="black" stroke-width="0.05"/>"#,
        b.min.x,
        b.min.y,
        b.width(),
        b.height()
    )
    .unwrap();
    for o in &s.env.obstacles {
        writeln!(out, r##"  <polygon class="obstacle" points="{}" fill="#888"/>"##, pts(o.vertices())).unwrap();
    }
    for (i, robot) in s.robots.iter().enumerate() {
        let color = agent_color(i);
        pose(&mut out, robot, &s.starts[i], &color, "start");
        pose(&mut out, robot, &s.goals[i], &color, "goal");
    }
    if let Some(sol) = solution {
        for (i, (robot, traj)) in s.robots.iter().zip(&sol.trajectories).enumerate() {
            let trace: Vec<Vec2> = traj.iter().map(|q| tracer(robot, q)).collect();
            writeln!(
                out,
                r#"  <polyline class="trajectory" data-agent="{i}" points="{}" fill="none" stroke="{}" stroke-width="0.08"/>"#,
                pts(&trace),
                agent_color(i)
            )
            .unwrap();
        }
    }
    out.push_str("  </g>\n</svg>\n");
    Ok(out)
}

pub fn render_svg(s: &Scenario, solution: Option<&SolutionRecord>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, svg_string(s, solution)?)?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
