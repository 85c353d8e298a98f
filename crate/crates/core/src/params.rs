//! Uniform access to named parameter blocks.
//!
//! Gradients reuse the parameter types themselves, so anything that
//! implements [`Parameters`] can be zeroed, flattened, summed and stepped
//! by the optimizers without knowing its structure.

pub trait Parameters {
    /// Calls `f` on every block in a fixed order.
    fn visit_blocks(&self, prefix: &str, f: &mut dyn FnMut(String, &[f64]));

    /// Same order as [`Parameters::visit_blocks`].
    fn visit_blocks_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit_blocks("", &mut |_, b| n += b.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit_blocks("", &mut |_, b| out.extend_from_slice(b));
        out
    }

    fn block_names(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit_blocks("", &mut |name, b| out.push((name, b.len())));
        out
    }

    /// Overwrites every value from `flat`, which must have `num_params()` entries.
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_blocks_mut("", &mut |_, b| {
            let len = b.len();
            b.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        });
        assert_eq!(offset, flat.len(), "flat parameter length");
    }

    fn fill_zero(&mut self) {
        self.visit_blocks_mut("", &mut |_, b| b.fill(0.0));
    }

    fn scale(&mut self, factor: f64) {
        self.visit_blocks_mut("", &mut |_, b| b.iter_mut().for_each(|v| *v *= factor));
    }

    /// `self += other`, block by block. Shapes must agree.
    fn add_from(&mut self, other: &Self)
    where
        Self: Sized,
    {
        let flat = other.flatten();
        let mut offset = 0;
        self.visit_blocks_mut("", &mut |_, b| {
            let len = b.len();
            for (x, y) in b.iter_mut().zip(&flat[offset..offset + len]) {
                *x += y;
            }
            offset += len;
        });
        assert_eq!(offset, flat.len(), "parameter shape mismatch");
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit_blocks("", &mut |_, b| ok &= b.iter().all(|v| v.is_finite()));
        ok
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Zeroed copy with identical shapes.
pub fn zeros_like<P: Parameters + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.fill_zero();
    z
}
