use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub initial_count: f64,
}

/// Rectangular time window `[start, start + width)` during which a
/// reaction fires with its rate multiplied by `1 / width`, so that the
/// window integrates to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start: f64,
    pub width: f64,
}

impl Pulse {
    pub fn new(start: f64, width: f64) -> Result<Self> {
        if !(start.is_finite() && width.is_finite() && width > 0.0) {
            return Err(Error::domain(format!("invalid pulse start={start} width={width}")));
        }
        Ok(Self { start, width })
    }

    pub fn end(&self) -> f64 {
        self.start + self.width
    }

    /// Rate multiplier at time `t`.
    pub fn gain(&self, t: f64) -> f64 {
        if t >= self.start && t < self.end() {
            1.0 / self.width
        } else {
            0.0
        }
    }
}

/// Mass-action reaction. Species are referenced by index together with
/// their stoichiometric coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate_constant: f64,
    pub trigger: Option<Pulse>,
}

impl Reaction {
    pub fn order(&self) -> u32 {
        self.reactants.iter().map(|&(_, k)| k).sum()
    }

    fn gain(&self, t: f64) -> f64 {
        self.trigger.map_or(1.0, |p| p.gain(t))
    }

    /// Deterministic rate `k Π xᵢ^νᵢ`.
    pub fn rate(&self, x: &[f64], t: f64) -> f64 {
        let mut r = self.rate_constant * self.gain(t);
        for &(i, k) in &self.reactants {
            r *= x[i].powi(k as i32);
        }
        r
    }

    /// Stochastic propensity `k Π x(x-1)…(x-ν+1)` on integer counts.
    pub fn propensity(&self, x: &[u64], t: f64) -> f64 {
        let mut a = self.rate_constant * self.gain(t);
        for &(i, k) in &self.reactants {
            for j in 0..u64::from(k) {
                a *= x[i].saturating_sub(j) as f64;
            }
        }
        a
    }

    /// Net change of every species when the reaction fires once.
    pub fn net_change(&self, n_species: usize) -> Vec<i64> {
        let mut d = vec![0; n_species];
        for &(i, k) in &self.reactants {
            d[i] -= i64::from(k);
        }
        for &(i, k) in &self.products {
            d[i] += i64::from(k);
        }
        d
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_species(&mut self, name: &str, initial_count: f64) -> Result<usize> {
        if self.index(name).is_some() {
            return Err(Error::domain(format!("duplicate species '{name}'")));
        }
        if !(initial_count.is_finite() && initial_count >= 0.0) {
            return Err(Error::domain(format!("initial count of {name} must be >= 0, got {initial_count}")));
        }
        self.species.push(Species { name: name.to_string(), initial_count });
        Ok(self.species.len() - 1)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    fn lookup(&self, names: &[&str]) -> Result<Vec<(usize, u32)>> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        for n in names {
            let i = self.index(n).ok_or_else(|| Error::domain(format!("unknown species '{n}'")))?;
            match out.iter_mut().find(|(j, _)| *j == i) {
                Some((_, k)) => *k += 1,
                None => out.push((i, 1)),
            }
        }
        Ok(out)
    }

    /// Adds `reactants -> products` with a positive rate constant.
    pub fn add_reaction(&mut self, reactants: &[&str], products: &[&str], rate_constant: f64) -> Result<usize> {
        self.add_triggered(reactants, products, rate_constant, None)
    }

    pub fn add_triggered(
        &mut self,
        reactants: &[&str],
        products: &[&str],
        rate_constant: f64,
        trigger: Option<Pulse>,
    ) -> Result<usize> {
        if !(rate_constant.is_finite() && rate_constant > 0.0) {
            return Err(Error::domain(format!("rate constant must be > 0, got {rate_constant}")));
        }
        if reactants.len() > 2 {
            return Err(Error::domain("reactions of order above 2 are not supported"));
        }
        let reaction = Reaction {
            reactants: self.lookup(reactants)?,
            products: self.lookup(products)?,
            rate_constant,
            trigger,
        };
        self.reactions.push(reaction);
        Ok(self.reactions.len() - 1)
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.species.iter().map(|s| s.initial_count).collect()
    }

    /// Initial counts rounded to integers, for stochastic simulation.
    pub fn initial_counts(&self) -> Vec<u64> {
        self.species.iter().map(|s| s.initial_count.round() as u64).collect()
    }

    pub fn set_initial(&mut self, name: &str, count: f64) -> Result<()> {
        let i = self.index(name).ok_or_else(|| Error::domain(format!("unknown species '{name}'")))?;
        self.species[i].initial_count = count;
        Ok(())
    }

    /// Mass-action right-hand side `dx/dt`.
    pub fn derivative(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for r in &self.reactions {
            let rate = r.rate(x, t);
            if rate == 0.0 {
                continue;
            }
            for &(i, k) in &r.reactants {
                dx[i] -= f64::from(k) * rate;
            }
            for &(i, k) in &r.products {
                dx[i] += f64::from(k) * rate;
            }
        }
    }

    /// Times at which some pulse switches on or off, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .reactions
            .iter()
            .filter_map(|r| r.trigger)
            .flat_map(|p| [p.start, p.end()])
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// One line per reaction: `A + B -> C @ rate`, `∅` for an empty side.
    pub fn dump(&self) -> String {
        let side = |terms: &[(usize, u32)]| {
            if terms.is_empty() {
                return "∅".to_string();
            }
            terms
                .iter()
                .map(|&(i, k)| {
                    let n = &self.species[i].name;
                    if k == 1 {
                        n.clone()
                    } else {
                        format!("{k}{n}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let mut out = String::new();
        for r in &self.reactions {
            let _ = write!(out, "{} -> {} @ {}", side(&r.reactants), side(&r.products), r.rate_constant);
            if let Some(p) = r.trigger {
                let _ = write!(out, " pulse[{}, {})", p.start, p.end());
            }
            out.push('\n');
        }
        out
    }
}
