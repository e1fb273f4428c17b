//! Scenario configuration: physical constants, geometry, per-user parameters,
//! and the flat `key = value` scenario file format.
//!
//! All dB-suffixed keys are converted to linear on load; everything internal
//! is linear.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{ArraySpacing, Vec3};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Full description of one simulation scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// BS UPA antenna counts along x and z.
    pub bs_cols: usize,
    pub bs_rows: usize,
    /// IRS UPA element counts along x and y.
    pub irs_cols: usize,
    pub irs_rows: usize,
    /// BS antenna spacings (meters).
    pub bs_dx: f64,
    pub bs_dz: f64,
    /// IRS element spacings (meters), must stay below lambda/2.
    pub irs_dx: f64,
    pub irs_dy: f64,
    pub wavelength: f64,
    pub bs_height: f64,
    pub irs_altitude: f64,
    /// Reference path gain at `ref_distance` (linear).
    pub ref_gain: f64,
    pub ref_distance: f64,
    /// Per-user transmit power cap (watts).
    pub tx_power: f64,
    /// Noise power (watts).
    pub noise_power: f64,
    /// SNR threshold (linear).
    pub snr_threshold: f64,
    pub v_max: f64,
    pub slot_duration: f64,
    pub num_slots: usize,
    pub users: Vec<Vec3>,
    pub priorities: Vec<f64>,
    pub arrival_probs: Vec<f64>,
    pub uav_start: Vec3,
    pub rng_seed: u64,
    // Optimizer knobs, exposed through the scenario file like everything else.
    pub sca_obj_tol: f64,
    pub sca_max_iters: usize,
    pub alpha_min: f64,
    pub barrier_gap: f64,
}

impl Default for ScenarioConfig {
    /// The reference scenario: 4x4 BS UPA at 25 m, 22x25 IRS at 100 m
    /// altitude, 6 ground users, 2.4 GHz carrier, 1 W per-user power,
    /// -110 dBm noise, 25 dB SNR threshold, 40 slots of 0.1 s.
    fn default() -> Self {
        let wavelength = SPEED_OF_LIGHT / 2.4e9;
        Self {
            bs_cols: 4,
            bs_rows: 4,
            irs_cols: 22,
            irs_rows: 25,
            bs_dx: wavelength / 2.0,
            bs_dz: wavelength / 2.0,
            irs_dx: wavelength / 10.0,
            irs_dy: wavelength / 10.0,
            wavelength,
            bs_height: 25.0,
            irs_altitude: 100.0,
            ref_gain: db_to_linear(-40.0),
            ref_distance: 1.0,
            tx_power: 1.0,
            noise_power: dbm_to_watts(-110.0),
            snr_threshold: db_to_linear(25.0),
            v_max: 5.0,
            slot_duration: 0.1,
            num_slots: 40,
            users: vec![
                Vec3::new(200.0, -100.0, 0.0),
                Vec3::new(150.0, 300.0, 0.0),
                Vec3::new(320.0, -280.0, 0.0),
                Vec3::new(490.0, 20.0, 0.0),
                Vec3::new(50.0, -200.0, 0.0),
                Vec3::new(730.0, 30.0, 0.0),
            ],
            priorities: vec![1.0; 6],
            arrival_probs: vec![0.5; 6],
            uav_start: Vec3::new(0.0, 0.0, 100.0),
            rng_seed: 1,
            sca_obj_tol: 1e-4,
            sca_max_iters: 20,
            alpha_min: 1e-6,
            barrier_gap: 1e-9,
        }
    }
}

impl ScenarioConfig {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_bs_antennas(&self) -> usize {
        self.bs_cols * self.bs_rows
    }

    pub fn num_irs_elements(&self) -> usize {
        self.irs_cols * self.irs_rows
    }

    /// BS reference antenna position.
    pub fn bs_pos(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.bs_height)
    }

    pub fn spacing(&self) -> ArraySpacing {
        ArraySpacing {
            wavelength: self.wavelength,
            irs_dx: self.irs_dx,
            irs_dy: self.irs_dy,
            bs_dx: self.bs_dx,
            bs_dz: self.bs_dz,
        }
    }

    /// SNR numerator constant `rho_o^2 d_o^4 P_o N_s^2 M / sigma_o^2`;
    /// dividing by the squared link distances gives the closed-form SNR.
    pub fn snr_scale(&self) -> f64 {
        let ns = self.num_irs_elements() as f64;
        let m = self.num_bs_antennas() as f64;
        self.ref_gain * self.ref_gain * self.ref_distance.powi(4) * self.tx_power * ns * ns * m
            / self.noise_power
    }

    /// Maximum per-slot displacement `v_max * slot_duration`.
    pub fn max_step(&self) -> f64 {
        self.v_max * self.slot_duration
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_bs_antennas() < 1 {
            return fail("BS antenna count must be >= 1".into());
        }
        if self.num_irs_elements() < 1 {
            return fail("IRS element count must be >= 1".into());
        }
        if !(self.wavelength > 0.0) {
            return fail(format!("wavelength must be positive, got {}", self.wavelength));
        }
        if !(self.irs_dx < self.wavelength / 2.0) || !(self.irs_dy < self.wavelength / 2.0) {
            return fail(format!(
                "IRS element spacing must be below lambda/2 = {}, got dx={} dy={}",
                self.wavelength / 2.0,
                self.irs_dx,
                self.irs_dy
            ));
        }
        for (name, v) in [
            ("d_ox", self.bs_dx),
            ("d_oz", self.bs_dz),
            ("d_x", self.irs_dx),
            ("d_y", self.irs_dy),
            ("rho_o", self.ref_gain),
            ("d_o", self.ref_distance),
            ("p_o", self.tx_power),
            ("sigma_o2", self.noise_power),
            ("gamma_th", self.snr_threshold),
            ("delta", self.slot_duration),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.v_max >= 0.0) {
            return fail(format!("v_max must be nonnegative, got {}", self.v_max));
        }
        if self.num_slots < 1 {
            return fail("n_t must be >= 1".into());
        }
        let k = self.num_users();
        if k < 1 {
            return fail("at least one user required".into());
        }
        if self.priorities.len() != k || self.arrival_probs.len() != k {
            return fail(format!(
                "users/priorities/epsilon lengths differ: {}/{}/{}",
                k,
                self.priorities.len(),
                self.arrival_probs.len()
            ));
        }
        for &e in &self.arrival_probs {
            if !(0.0..=1.0).contains(&e) {
                return fail(format!("epsilon must lie in [0,1], got {e}"));
            }
        }
        for &b in &self.priorities {
            if !(b >= 0.0) || !b.is_finite() {
                return fail(format!("priority must be nonnegative, got {b}"));
            }
        }
        for u in &self.users {
            if !u.is_finite() {
                return fail(format!("non-finite user position {u:?}"));
            }
        }
        if !self.uav_start.is_finite() {
            return fail(format!("non-finite q_init {:?}", self.uav_start));
        }
        if (self.uav_start.z - self.irs_altitude).abs() > 1e-9 {
            return fail(format!(
                "q_init altitude {} must equal Z = {}",
                self.uav_start.z, self.irs_altitude
            ));
        }
        if self.uav_start.dist(self.bs_pos()) == 0.0 {
            return fail("q_init coincides with the BS reference antenna".into());
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < 1e-2) {
            return fail(format!("alpha_min out of range: {}", self.alpha_min));
        }
        Ok(())
    }

    /// Loads a scenario file: one `key = value` per line, `#` comments,
    /// Vec3 values as `x,y,z`, lists as `;`-separated entries.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected `key = value`", path.display(), lineno + 1))
            })?;
            cfg.apply_override(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` override. Used both by the file parser and by
    /// CLI `--set` flags; unknown keys are rejected before any computation.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("key `{key}`: invalid {what} `{value}`"));
        let f = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("number"));
        let us = |v: &str| v.trim().parse::<usize>().map_err(|_| bad("integer"));
        match key {
            "m_x" => self.bs_cols = us(value)?,
            "m_z" => self.bs_rows = us(value)?,
            "n_sx" => self.irs_cols = us(value)?,
            "n_sy" => self.irs_rows = us(value)?,
            // Total IRS element count; keeps n_sy and adjusts n_sx.
            "n_s" => {
                let n = us(value)?;
                if self.irs_rows == 0 || n % self.irs_rows != 0 {
                    return Err(Error::Config(format!(
                        "n_s = {n} is not divisible by n_sy = {}",
                        self.irs_rows
                    )));
                }
                self.irs_cols = n / self.irs_rows;
            }
            "d_ox" => self.bs_dx = f(value)?,
            "d_oz" => self.bs_dz = f(value)?,
            "d_x" => self.irs_dx = f(value)?,
            "d_y" => self.irs_dy = f(value)?,
            "wavelength" => self.wavelength = f(value)?,
            "f_c_hz" => self.wavelength = SPEED_OF_LIGHT / f(value)?,
            "bs_height" => self.bs_height = f(value)?,
            "irs_altitude" => {
                self.irs_altitude = f(value)?;
                self.uav_start.z = self.irs_altitude;
            }
            "rho_o" => self.ref_gain = f(value)?,
            "rho_o_db" => self.ref_gain = db_to_linear(f(value)?),
            "d_o" => self.ref_distance = f(value)?,
            "p_o" => self.tx_power = f(value)?,
            "sigma_o2" => self.noise_power = f(value)?,
            "sigma_o2_dbm" => self.noise_power = dbm_to_watts(f(value)?),
            "gamma_th" => self.snr_threshold = f(value)?,
            "gamma_th_db" => self.snr_threshold = db_to_linear(f(value)?),
            "v_max" => self.v_max = f(value)?,
            "delta" => self.slot_duration = f(value)?,
            "n_t" => self.num_slots = us(value)?,
            "users" => self.users = parse_vec3_list(value).map_err(|e| bad(&e))?,
            "priorities" => self.priorities = parse_f64_list(value).map_err(|e| bad(&e))?,
            "epsilon" => self.arrival_probs = parse_f64_list(value).map_err(|e| bad(&e))?,
            "q_init" => self.uav_start = parse_vec3(value).map_err(|e| bad(&e))?,
            "seed" => self.rng_seed = value.trim().parse().map_err(|_| bad("integer"))?,
            "sca_obj_tol" => self.sca_obj_tol = f(value)?,
            "sca_max_iters" => self.sca_max_iters = us(value)?,
            "alpha_min" => self.alpha_min = f(value)?,
            "barrier_gap" => self.barrier_gap = f(value)?,
            _ => return Err(Error::Config(format!("unknown scenario key `{key}`"))),
        }
        Ok(())
    }

    /// Serializes back into the scenario file format.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let v3 = |v: Vec3| format!("{},{},{}", v.x, v.y, v.z);
        let _ = writeln!(s, "m_x = {}", self.bs_cols);
        let _ = writeln!(s, "m_z = {}", self.bs_rows);
        let _ = writeln!(s, "n_sx = {}", self.irs_cols);
        let _ = writeln!(s, "n_sy = {}", self.irs_rows);
        let _ = writeln!(s, "d_ox = {}", self.bs_dx);
        let _ = writeln!(s, "d_oz = {}", self.bs_dz);
        let _ = writeln!(s, "d_x = {}", self.irs_dx);
        let _ = writeln!(s, "d_y = {}", self.irs_dy);
        let _ = writeln!(s, "wavelength = {}", self.wavelength);
        let _ = writeln!(s, "bs_height = {}", self.bs_height);
        let _ = writeln!(s, "irs_altitude = {}", self.irs_altitude);
        let _ = writeln!(s, "rho_o = {}", self.ref_gain);
        let _ = writeln!(s, "d_o = {}", self.ref_distance);
        let _ = writeln!(s, "p_o = {}", self.tx_power);
        let _ = writeln!(s, "sigma_o2 = {}", self.noise_power);
        let _ = writeln!(s, "gamma_th = {}", self.snr_threshold);
        let _ = writeln!(s, "v_max = {}", self.v_max);
        let _ = writeln!(s, "delta = {}", self.slot_duration);
        let _ = writeln!(s, "n_t = {}", self.num_slots);
        let users: Vec<String> = self.users.iter().map(|u| v3(*u)).collect();
        let _ = writeln!(s, "users = {}", users.join("; "));
        let pr: Vec<String> = self.priorities.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "priorities = {}", pr.join("; "));
        let eps: Vec<String> = self.arrival_probs.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "epsilon = {}", eps.join("; "));
        let _ = writeln!(s, "q_init = {}", v3(self.uav_start));
        let _ = writeln!(s, "seed = {}", self.rng_seed);
        s
    }
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected `x,y,z`, got `{s}`"));
    }
    let mut v = [0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.parse().map_err(|_| format!("bad component `{p}`"))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_vec3_list(s: &str) -> std::result::Result<Vec<Vec3>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_vec3)
        .collect()
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| format!("bad number `{p}`")))
        .collect()
}
