use candle_core::{DType, Device, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Named trainable parameters of one network, created from a seeded RNG so
/// that initialization is reproducible.
///
/// Each network (generator, discriminator, encoder, ...) owns its own store;
/// optimizers are built from one store only, which makes update isolation
/// between networks structural rather than something to remember.
pub struct ParamStore {
    device: Device,
    dtype: DType,
    rng: ChaCha12Rng,
    vars: Vec<(String, Var)>,
}

impl ParamStore {
    pub fn new(seed: u64, dtype: DType) -> Self {
        ParamStore {
            device: Device::Cpu,
            dtype,
            rng: ChaCha12Rng::seed_from_u64(seed),
            vars: Vec::new(),
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    /// Create a parameter initialized from N(0, std^2).
    pub fn normal(&mut self, name: &str, shape: &[usize], std: f64) -> Result<Var> {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut self.rng);
                x * std
            })
            .collect();
        let t = Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?;
        self.register(name, t)
    }

    /// Create a parameter filled with a constant.
    pub fn constant(&mut self, name: &str, shape: &[usize], value: f64) -> Result<Var> {
        let n: usize = shape.iter().product();
        let t = Tensor::from_vec(vec![value; n], shape, &self.device)?.to_dtype(self.dtype)?;
        self.register(name, t)
    }

    fn register(&mut self, name: &str, init: Tensor) -> Result<Var> {
        if self.vars.iter().any(|(n, _)| n == name) {
            return Err(Error::Argument(format!("duplicate parameter name {name}")));
        }
        let var = Var::from_tensor(&init)?;
        self.vars.push((name.to_string(), var.clone()));
        Ok(var)
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn named(&self) -> &[(String, Var)] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Flatten every parameter to f32 rows, in registration order.
    pub fn export(&self) -> Result<Vec<(String, Vec<usize>, Vec<f32>)>> {
        let mut out = Vec::with_capacity(self.vars.len());
        for (name, var) in &self.vars {
            let t = var.as_tensor().to_dtype(DType::F32)?;
            let shape = t.dims().to_vec();
            let data = t.flatten_all()?.to_vec1::<f32>()?;
            out.push((name.clone(), shape, data));
        }
        Ok(out)
    }

    /// Overwrite parameters from exported rows. Every stored parameter must be
    /// present with a matching shape.
    pub fn import(&mut self, rows: &[(String, Vec<usize>, Vec<f32>)]) -> Result<()> {
        for (name, var) in &self.vars {
            let row = rows
                .iter()
                .find(|(n, _, _)| n == name)
                .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor {name}")))?;
            if row.1 != var.dims() {
                return Err(Error::Format(format!(
                    "checkpoint tensor {name} has shape {:?}, expected {:?}",
                    row.1,
                    var.dims()
                )));
            }
            let t =
                Tensor::from_vec(row.2.clone(), row.1.as_slice(), &self.device)?.to_dtype(self.dtype)?;
            var.set(&t)?;
        }
        Ok(())
    }

    /// FNV-1a over the little-endian f32 bytes of all parameters. Used by
    /// tests that assert bit-identity of a network across operations.
    pub fn fingerprint(&self) -> Result<u64> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (name, _, data) in self.export()? {
            for b in name.as_bytes() {
                h = (h ^ *b as u64).wrapping_mul(0x100_0000_01b3);
            }
            for v in data {
                for b in v.to_le_bytes() {
                    h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
                }
            }
        }
        Ok(h)
    }
}

/// Deterministic stream of Gaussian tensors, used for latent draws, instance
/// noise and dropout masks. All randomness in training flows through one of
/// these, seeded explicitly.
pub struct NoiseSource {
    rng: ChaCha12Rng,
    device: Device,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            rng: ChaCha12Rng::seed_from_u64(seed),
            device: Device::Cpu,
        }
    }

    pub fn normal(&mut self, shape: &[usize], dtype: DType) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n)
            .map(|_| StandardNormal.sample(&mut self.rng))
            .collect();
        Ok(Tensor::from_vec(data, shape, &self.device)?.to_dtype(dtype)?)
    }

    /// Inverted dropout mask: entries are 0 with probability `p`,
    /// 1/(1-p) otherwise.
    pub fn dropout_mask(&mut self, shape: &[usize], p: f64, dtype: DType) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let keep = 1.0 - p;
        let data: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rand::Rng::random(&mut self.rng);
                if u < p {
                    0.0
                } else {
                    1.0 / keep
                }
            })
            .collect();
        Ok(Tensor::from_vec(data, shape, &self.device)?.to_dtype(dtype)?)
    }

    pub fn uniform_index(&mut self, bound: usize) -> usize {
        rand::Rng::random_range(&mut self.rng, 0..bound)
    }
}
