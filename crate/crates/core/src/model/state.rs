//! State records for every model tier, with their flat-vector layouts.
//!
//! The integrator works on `Vec<f64>`; each record knows how to pack itself
//! into that vector and how to name each slot for tabular output.

use serde::{Deserialize, Serialize};

use super::index::{ChainTable, SiteTable};

/// Full chain-structured state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsState {
    /// Chain counts `N_{l,i}` over `I_L`.
    pub chains: ChainTable,
    pub e1: f64,
    pub e21: f64,
    /// Attached enzyme mass `e22^{l,i}`, `i >= 1`.
    pub e22: SiteTable,
    pub p: f64,
    pub n: f64,
}

impl NsState {
    pub fn zeros(max_len: usize) -> Self {
        Self {
            chains: ChainTable::zeros(max_len),
            e1: 0.0,
            e21: 0.0,
            e22: SiteTable::zeros(max_len),
            p: 0.0,
            n: 0.0,
        }
    }

    pub fn max_len(&self) -> usize {
        self.chains.max_len()
    }

    /// Length of the packed vector: chains, e1, e21, attached sites, p, n.
    pub fn dim(max_len: usize) -> usize {
        let l = max_len;
        l * (l + 3) / 2 + 2 + l * (l + 1) / 2 + 2
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::dim(self.max_len()));
        v.extend_from_slice(self.chains.as_slice());
        v.push(self.e1);
        v.push(self.e21);
        v.extend_from_slice(self.e22.as_slice());
        v.push(self.p);
        v.push(self.n);
        v
    }

    /// `None` if `v` does not have length [`NsState::dim`].
    pub fn from_slice(max_len: usize, v: &[f64]) -> Option<Self> {
        if v.len() != Self::dim(max_len) {
            return None;
        }
        let nc = max_len * (max_len + 3) / 2;
        let ns = max_len * (max_len + 1) / 2;
        Some(Self {
            chains: ChainTable::from_flat(max_len, &v[..nc])?,
            e1: v[nc],
            e21: v[nc + 1],
            e22: SiteTable::from_flat(max_len, &v[nc + 2..nc + 2 + ns])?,
            p: v[nc + 2 + ns],
            n: v[nc + 3 + ns],
        })
    }

    pub fn labels(max_len: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(Self::dim(max_len));
        let chains = ChainTable::zeros(max_len);
        out.extend(chains.index_set().iter().map(|(l, i)| format!("N_{l}_{i}")));
        out.push("e1".into());
        out.push("e21".into());
        let sites = SiteTable::zeros(max_len);
        out.extend(sites.index_set().iter().map(|(l, i)| format!("e22_{l}_{i}")));
        out.push("p".into());
        out.push("n".into());
        out
    }
}

/// Offsets into the packed chain-structured vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NsLayout {
    pub e1: usize,
    pub e21: usize,
    pub sites: usize,
    pub p: usize,
    pub n: usize,
}

impl NsLayout {
    pub fn new(max_len: usize) -> Self {
        let nc = max_len * (max_len + 3) / 2;
        let ns = max_len * (max_len + 1) / 2;
        Self {
            e1: nc,
            e21: nc + 1,
            sites: nc + 2,
            p: nc + 2 + ns,
            n: nc + 3 + ns,
        }
    }
}

/// Aggregated S-system state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SState {
    pub e1: f64,
    pub e21: f64,
    pub e22: f64,
    pub s: f64,
    pub rho: f64,
    pub p: f64,
    pub n: f64,
}

impl SState {
    pub const LABELS: [&'static str; 7] = ["e1", "e21", "e22", "S", "rho", "p", "n"];

    pub fn to_array(&self) -> [f64; 7] {
        [self.e1, self.e21, self.e22, self.s, self.rho, self.p, self.n]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match *v {
            [e1, e21, e22, s, rho, p, n] => Some(Self {
                e1,
                e21,
                e22,
                s,
                rho,
                p,
                n,
            }),
            _ => None,
        }
    }
}

/// Single-trait T-system state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TState {
    pub e1: f64,
    pub e2: f64,
    pub t: f64,
    pub rho: f64,
    pub p: f64,
    pub n: f64,
}

impl TState {
    pub const LABELS: [&'static str; 6] = ["e1", "e2", "T", "rho", "p", "n"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.e1, self.e2, self.t, self.rho, self.p, self.n]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match *v {
            [e1, e2, t, rho, p, n] => Some(Self {
                e1,
                e2,
                t,
                rho,
                p,
                n,
            }),
            _ => None,
        }
    }
}

/// Multiple-trait T-system state. Packed as `[e1(M), e2(M), T, rho, p, n(M)]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MtState {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub t: f64,
    pub rho: f64,
    pub p: f64,
    pub n: Vec<f64>,
}

impl MtState {
    pub fn zeros(traits: usize) -> Self {
        Self {
            e1: vec![0.0; traits],
            e2: vec![0.0; traits],
            n: vec![0.0; traits],
            ..Default::default()
        }
    }

    pub fn traits(&self) -> usize {
        self.n.len()
    }

    pub fn dim(traits: usize) -> usize {
        3 * traits + 3
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::dim(self.traits()));
        v.extend_from_slice(&self.e1);
        v.extend_from_slice(&self.e2);
        v.extend_from_slice(&[self.t, self.rho, self.p]);
        v.extend_from_slice(&self.n);
        v
    }

    pub fn from_slice(traits: usize, v: &[f64]) -> Option<Self> {
        if v.len() != Self::dim(traits) {
            return None;
        }
        let m = traits;
        Some(Self {
            e1: v[..m].to_vec(),
            e2: v[m..2 * m].to_vec(),
            t: v[2 * m],
            rho: v[2 * m + 1],
            p: v[2 * m + 2],
            n: v[2 * m + 3..].to_vec(),
        })
    }

    /// Trait labels are 1-based in output headers.
    pub fn labels(traits: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(Self::dim(traits));
        out.extend((1..=traits).map(|j| format!("e1_{j}")));
        out.extend((1..=traits).map(|j| format!("e2_{j}")));
        out.extend(["T", "rho", "p"].map(String::from));
        out.extend((1..=traits).map(|j| format!("n_{j}")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ns_pack_roundtrip() {
        let l = 3;
        let mut s = NsState::zeros(l);
        for (k, x) in s.chains.as_mut_slice().iter_mut().enumerate() {
            *x = k as f64 + 0.5;
        }
        for (k, x) in s.e22.as_mut_slice().iter_mut().enumerate() {
            *x = -(k as f64);
        }
        s.e1 = 11.0;
        s.e21 = 12.0;
        s.p = 13.0;
        s.n = 14.0;
        let v = s.to_vec();
        assert_eq!(v.len(), NsState::dim(l));
        assert_eq!(NsState::labels(l).len(), v.len());
        let lay = NsLayout::new(l);
        assert_eq!(v[lay.e1], 11.0);
        assert_eq!(v[lay.e21], 12.0);
        assert_eq!(v[lay.p], 13.0);
        assert_eq!(v[lay.n], 14.0);
        assert_eq!(NsState::from_slice(l, &v), Some(s));
        assert_eq!(NsState::from_slice(l, &v[1..]), None);
    }

    #[test]
    fn ns_labels_name_components() {
        let labels = NsState::labels(2);
        assert_eq!(
            labels,
            [
                "N_1_0", "N_1_1", "N_2_0", "N_2_1", "N_2_2", "e1", "e21", "e22_1_1", "e22_2_1",
                "e22_2_2", "p", "n"
            ]
        );
    }

    #[test]
    fn mt_pack_roundtrip() {
        let s = MtState {
            e1: vec![1.0, 2.0],
            e2: vec![3.0, 4.0],
            t: 5.0,
            rho: 6.0,
            p: 7.0,
            n: vec![8.0, 9.0],
        };
        let v = s.to_vec();
        assert_eq!(v, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(MtState::from_slice(2, &v), Some(s));
        assert_eq!(MtState::labels(2)[8], "n_2");
    }
}
