use crate::error::{Error, Result};

/// Physical parameters of the oscillator-bath model plus the structural
/// choices made when a master equation is derived from it.
///
/// Units are `hbar = k_B = m = 1`. The bare system Hamiltonian is
/// `H0 = (omega0^2 x^2 + p^2) / 2`; when `counter_term` is set the physical
/// Hamiltonian additionally carries `+ reorg * x^2 / 2`, which exactly
/// compensates the bath-induced softening of the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Bare angular frequency, > 0.
    pub omega0: f64,
    /// Dimensionless coupling strength, >= 0.
    pub lambda: f64,
    /// Bath cutoff frequency, > 0.
    pub cutoff: f64,
    /// Bath temperature, >= 0.
    pub temperature: f64,
    /// Physical Hamiltonian includes the counter term `reorg * x^2 / 2`.
    pub counter_term: bool,
    /// Keep the Lamb-shift terms in the master equation.
    pub lamb_shift: bool,
    /// Apply the secular approximation (GKLS form).
    pub secular: bool,
}

impl ModelParams {
    /// Validated constructor. Flags default to the conventional choice:
    /// counter term present, Lamb shift kept, non-secular.
    pub fn new(omega0: f64, lambda: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        let p = ModelParams {
            omega0,
            lambda,
            cutoff,
            temperature,
            counter_term: true,
            lamb_shift: true,
            secular: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_counter_term(mut self, on: bool) -> Self {
        self.counter_term = on;
        self
    }

    pub fn with_lamb_shift(mut self, on: bool) -> Self {
        self.lamb_shift = on;
        self
    }

    pub fn with_secular(mut self, on: bool) -> Self {
        self.secular = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "omega0 must be > 0, got {}",
                self.omega0
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(Error::InvalidParams(format!(
                "cutoff must be > 0, got {}",
                self.cutoff
            )));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::InvalidParams(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Reorganisation-induced frequency shift, `lambda * cutoff` for the
    /// algebraic-Ohmic bath.
    pub fn reorg(&self) -> f64 {
        self.lambda * self.cutoff
    }

    /// Squared trapping frequency of the Hamiltonian described by these
    /// parameters: `omega0^2 + reorg` with the counter term, `omega0^2`
    /// without.
    pub fn effective_omega_sq(&self) -> f64 {
        if self.counter_term {
            self.omega0 * self.omega0 + self.reorg()
        } else {
            self.omega0 * self.omega0
        }
    }

    /// Bohr frequency of the Hamiltonian described by these parameters.
    pub fn bohr_frequency(&self) -> f64 {
        self.effective_omega_sq().sqrt()
    }

    /// Squared frequency after subtracting the reorganisation shift from
    /// the effective potential.
    pub fn renormalised_omega_sq(&self) -> f64 {
        self.effective_omega_sq() - self.reorg()
    }

    /// Stability criterion of the exact dynamics: the renormalised
    /// potential must remain confining. Requires a nonzero coupling for
    /// the dissipative roots to sit strictly in the left half-plane.
    pub fn is_exact_stable(&self) -> bool {
        self.effective_omega_sq() > self.reorg()
    }

    /// Parameters describing the same physical model with the
    /// reorganisation energy subtracted from the derivation Hamiltonian.
    ///
    /// With a counter term present this simply drops it; without one the
    /// bare frequency itself is shifted down, which fails if the potential
    /// becomes unconfining. Master equations built from the result, with
    /// `lamb_shift = false`, realise the conventional shifted recipe.
    pub fn shifted(&self) -> Result<Self> {
        let mut p = self.clone();
        if self.counter_term {
            p.counter_term = false;
        } else {
            let w2 = self.omega0 * self.omega0 - self.reorg();
            if w2 <= 0.0 {
                return Err(Error::Unconfined(w2));
            }
            p.omega0 = w2.sqrt();
        }
        Ok(p)
    }
}
