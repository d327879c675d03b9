//! Fixed-step classical Runge–Kutta integrator shared by every continuous
//! protocol.

/// Scratch buffers for one RK4 step of a system of size `len`.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            stage: vec![0.0; len],
        }
    }

    /// Advances `x` from `t` to `t + dt`. `f(t, x, dx)` writes the vector
    /// field into `dx`; an error aborts the step and leaves `x` untouched.
    #[allow(clippy::needless_range_loop)]
    pub fn step<E, F>(&mut self, f: &mut F, t: f64, x: &mut [f64], dt: f64) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        let h2 = 0.5 * dt;
        f(t, x, &mut self.k1)?;
        for i in 0..x.len() {
            self.stage[i] = x[i] + h2 * self.k1[i];
        }
        f(t + h2, &self.stage, &mut self.k2)?;
        for i in 0..x.len() {
            self.stage[i] = x[i] + h2 * self.k2[i];
        }
        f(t + h2, &self.stage, &mut self.k3)?;
        for i in 0..x.len() {
            self.stage[i] = x[i] + dt * self.k3[i];
        }
        f(t + dt, &self.stage, &mut self.k4)?;
        let h6 = dt / 6.0;
        for i in 0..x.len() {
            x[i] += h6 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut rk = Rk4::new(1);
        let mut x = [1.0];
        let dt = 0.01;
        for k in 0..100 {
            rk.step::<(), _>(
                &mut |_, x, dx| {
                    dx[0] = -x[0];
                    Ok(())
                },
                k as f64 * dt,
                &mut x,
                dt,
            )
            .unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn error_leaves_state() {
        let mut rk = Rk4::new(1);
        let mut x = [2.0];
        let r = rk.step(
            &mut |t, _, _| if t > 0.0 { Err("late") } else { Ok(()) },
            0.0,
            &mut x,
            0.1,
        );
        assert_eq!(r, Err("late"));
        assert_eq!(x, [2.0]);
    }
}
