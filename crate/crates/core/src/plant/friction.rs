//! Stick-slip of the wiper pad on the wall.
//!
//! The pad hangs off the tip on a lateral wrist spring. While stuck, the pad
//! holds its anchor and the spring load grows with tip travel. Once the load
//! exceeds `mu_s * N` the pad breaks away and slides, carrying a kinetic load
//! of `mu_k * N`. The load accumulated during the stick phase is kept as a
//! transient that bleeds off exponentially with slip distance; the plant
//! couples a fraction of it into the normal force reading.

/// Tip speeds below this re-stick a sliding pad (m/s).
pub const RESTICK_SPEED: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub mu_s: f64,
    pub mu_k: f64,
    /// Lateral wrist stiffness (N/m).
    pub k_w: f64,
    /// Slip distance over which the stick transient decays by 1/e (m).
    pub decay_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PadFriction {
    params: FrictionParams,
    in_contact: bool,
    sticking: bool,
    anchor_y: f64,
    pad_y: f64,
    f_t: f64,
    transient: f64,
}

impl PadFriction {
    pub fn new(params: FrictionParams) -> Self {
        Self {
            params,
            in_contact: false,
            sticking: false,
            anchor_y: 0.0,
            pad_y: 0.0,
            f_t: 0.0,
            transient: 0.0,
        }
    }

    pub fn sticking(&self) -> bool {
        self.sticking
    }

    pub fn anchor_y(&self) -> f64 {
        self.anchor_y
    }

    /// Current tangential load on the pad (N).
    pub fn tangential_force(&self) -> f64 {
        self.f_t
    }

    /// Stick-phase load still coupled into the normal reading (N).
    pub fn transient(&self) -> f64 {
        self.transient
    }

    /// Advances the pad state. `normal_load` is the compressive force
    /// magnitude, `None` when out of contact. Returns the tangential force.
    pub fn update(&mut self, normal_load: Option<f64>, y_tip: f64, y_rate: f64) -> f64 {
        let Some(load) = normal_load else {
            *self = Self::new(self.params);
            self.pad_y = y_tip;
            return 0.0;
        };
        let p = self.params;
        if !self.in_contact {
            self.in_contact = true;
            self.sticking = true;
            self.anchor_y = y_tip;
            self.pad_y = y_tip;
        }

        if !self.sticking && y_rate.abs() < RESTICK_SPEED {
            // Keep the spring preload continuous across the re-stick.
            let pad = y_tip - self.f_t / p.k_w;
            if (p.k_w * (y_tip - pad)).abs() <= p.mu_s * load {
                self.sticking = true;
                self.anchor_y = pad;
                self.pad_y = pad;
            }
        }

        if self.sticking {
            let spring = p.k_w * (y_tip - self.anchor_y);
            if spring.abs() <= p.mu_s * load {
                self.f_t = spring;
                self.transient = spring;
                return self.f_t;
            }
            self.sticking = false;
        }

        let dir = if y_rate != 0.0 {
            y_rate.signum()
        } else {
            self.f_t.signum()
        };
        self.f_t = p.mu_k * load * dir;
        let pad = y_tip - self.f_t / p.k_w;
        let slid = (pad - self.pad_y).abs();
        self.pad_y = pad;
        if p.decay_length > 0.0 {
            self.transient *= (-slid / p.decay_length).exp();
        } else {
            self.transient = 0.0;
        }
        self.f_t
    }
}
