use crate::field::{sym_index, sym_len, FieldError, FlowState, PressureLaw, ScalarField, Spectral, VectorField};

/// Right-hand side of `∂t ϱ = −div m`, `∂t m = −div(m⊗m/ϱ + p(ϱ) I)`.
///
/// Products are formed pointwise and the resulting derivatives are
/// truncated to the 2/3-rule band when `dealias` is set.
#[derive(Clone, Debug)]
pub struct EulerRhs {
    spectral: Spectral,
    law: PressureLaw,
    dealias: bool,
}

impl EulerRhs {
    pub fn new(spectral: Spectral, law: PressureLaw, dealias: bool) -> Self {
        Self {
            spectral,
            law,
            dealias,
        }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Returns `(∂t ϱ, ∂t m)`, or the density-exit abort signal.
    pub fn eval(&self, state: &FlowState) -> Result<(ScalarField, VectorField), FieldError> {
        state.check_density(&self.law)?;
        let grid = state.grid();
        let d = grid.dim();
        let m_comps: Vec<&[f64]> = (0..d).map(|c| state.m.component(c)).collect();
        let mut drho = self.spectral.divergence_raw(&m_comps, self.dealias);
        drho.iter_mut().for_each(|x| *x = -*x);

        let rho = state.rho.values();
        let mut flux = vec![vec![0.0; grid.len()]; sym_len(d)];
        for i in 0..d {
            for j in i..d {
                let out = &mut flux[sym_index(d, i, j)];
                let (mi, mj) = (state.m.component(i), state.m.component(j));
                for k in 0..grid.len() {
                    out[k] = mi[k] * mj[k] / rho[k];
                }
                if i == j {
                    for k in 0..grid.len() {
                        out[k] += self.law.pressure(rho[k]);
                    }
                }
            }
        }
        let mut dm = self.spectral.tensor_divergence_raw(&flux, self.dealias);
        for c in 0..d {
            dm.component_mut(c).iter_mut().for_each(|x| *x = -*x);
        }
        Ok((ScalarField::new(grid, drho)?, dm))
    }
}

/// One-shot evaluation of the Euler right-hand side.
pub fn euler_rhs(
    state: &FlowState,
    law: &PressureLaw,
    dealias: bool,
) -> Result<(ScalarField, VectorField), FieldError> {
    EulerRhs::new(Spectral::new(state.grid()), law.clone(), dealias).eval(state)
}
