//! Waypoint generation from LiDAR range and gimbal pitch, and the first-order
//! spread of the vertical step.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointGeometry {
    /// Gimbal pitch below the horizon, rad.
    pub pitch: f64,
    pub yaw: f64,
    /// Measured LiDAR range, m.
    pub lidar_distance: f64,
    /// Desired clearance, m.
    pub clearance: f64,
    pub lidar_std: f64,
    pub gimbal_std: f64,
}

/// Next waypoint given range noise `v_d` and pitch noise `v_phi`.
pub fn next_waypoint(current: [f64; 3], geom: &WaypointGeometry, noise: (f64, f64)) -> [f64; 3] {
    let (v_d, v_phi) = noise;
    let angle = geom.pitch + v_phi;
    let horiz = geom.clearance * angle.cos();
    [
        current[0] + horiz * geom.yaw.cos(),
        current[1] + horiz * geom.yaw.sin(),
        vertical_recursion(current[2], geom.clearance, geom.lidar_distance, geom.pitch, v_d, v_phi),
    ]
}

/// `z + h - (d + v_d) sin(phi + v_phi)`.
pub fn vertical_recursion(z_prev: f64, h: f64, d: f64, phi: f64, v_d: f64, v_phi: f64) -> f64 {
    z_prev + h - (d + v_d) * (phi + v_phi).sin()
}

/// Linearised standard deviation of the vertical step.
pub fn waypoint_std(d: f64, phi: f64, sigma_lidar: f64, sigma_gimbal: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    (s * s * sigma_lidar * sigma_lidar + d * d * c * c * sigma_gimbal * sigma_gimbal).sqrt()
}
