//! One agent warns another only when a hazard on the other's path is hidden
//! from the other's view.
use selfhood::autonomous::Pos;
use selfhood::social::{hazard_fixture, perspective_transform, warn_of_hazard};

fn main() -> selfhood::Result<()> {
    for hazard in [None, Some(Pos::new(4, 0)), Some(Pos::new(1, 2)), Some(Pos::new(5, 2))] {
        let (world, me, other, path) = hazard_fixture(hazard)?;
        let seen = perspective_transform(&world, &other)?;
        let warning = warn_of_hazard(&me, &other, &world, &path)?;
        let at = hazard.map_or("none".into(), |p| format!("({}, {})", p.x, p.y));
        println!(
            "hazard {at:<8} on path {:<5} seen by walker {:<5} -> {warning:?}",
            hazard.is_some_and(|h| path.contains(&h)),
            hazard.is_some_and(|h| seen.hazards.contains(&h))
        );
    }
    Ok(())
}
