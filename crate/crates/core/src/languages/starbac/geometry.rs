use serde::{Deserialize, Serialize};

/// Axis-aligned rectangular building.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub name: String,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Building {
    pub fn new(name: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Building {
            name: name.to_string(),
            x0: x0.min(x1),
            y0: y0.min(y1),
            x1: x0.max(x1),
            y1: y0.max(y1),
        }
    }

    /// Euclidean distance from a point to the rectangle; 0 inside.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(0.0).max(x - self.x1);
        let dy = (self.y0 - y).max(0.0).max(y - self.y1);
        dx.hypot(dy)
    }

    pub fn within(&self, x: f64, y: f64, d: f64) -> bool {
        self.distance(x, y) <= d + 1e-9
    }
}

/// The five buildings of the synthetic campus.
pub fn campus() -> Vec<Building> {
    vec![
        Building::new("Main", 1.0, 3.0, 4.0, 4.0),
        Building::new("Library", 1.0, 1.0, 2.0, 2.0),
        Building::new("Station", 8.0, 1.0, 9.0, 9.0),
        Building::new("Laboratory", 2.0, 6.0, 4.0, 8.0),
        Building::new("ComputerRoom", 6.0, 6.0, 7.0, 7.0),
    ]
}

/// Canonical name of a position, used as a domain element.
pub fn position_name(x: f64, y: f64) -> String {
    format!("{x},{y}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_to_rectangle() {
        let b = Building::new("b", 1.0, 1.0, 2.0, 2.0);
        assert_eq!(b.distance(1.5, 1.5), 0.0);
        assert_eq!(b.distance(2.0, 1.0), 0.0);
        assert_eq!(b.distance(4.0, 1.5), 2.0);
        assert!((b.distance(3.0, 3.0) - 2f64.sqrt()).abs() < 1e-12);
        assert!(b.within(3.0, 3.0, 2.0));
        assert!(!b.within(3.0, 3.0, 1.0));
    }

    #[test]
    fn computer_room_contains_its_center() {
        let room = campus().into_iter().find(|b| b.name == "ComputerRoom").unwrap();
        assert!(room.within(6.5, 6.5, 0.0));
    }
}
