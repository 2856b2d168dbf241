use std::collections::VecDeque;
use std::sync::OnceLock;

use num_bigint::BigUint;
use rustc_hash::FxHashMap;

use super::{Elem, GroupBackend, GroupOps};
use crate::error::{Budget, Error, Result};

/// Groups up to this order get a full multiplication table.
const TABLE_LIMIT: usize = 2048;

/// A fully enumerated group. Elements are indexed `0..|G|` in the fixed
/// element order, so index order and encoding order agree.
#[derive(Debug)]
pub struct FiniteGroup {
    backend: GroupBackend,
    elements: Vec<Elem>,
    index: FxHashMap<Elem, u32>,
    inverse: Vec<u32>,
    identity: u32,
    table: Option<Vec<u32>>,
    generators: Vec<u32>,
    classes: OnceLock<ConjugacyData>,
}

impl FiniteGroup {
    pub fn new(backend: GroupBackend, budget: Budget) -> Result<Self> {
        budget.check(&backend.enumeration_cost())?;
        let order = backend.order();
        if order > BigUint::from(u32::MAX) {
            return Err(Error::invalid(format!(
                "{backend} is too large to enumerate"
            )));
        }
        let elements = backend.elements();
        debug_assert_eq!(BigUint::from(elements.len()), order);
        let index: FxHashMap<Elem, u32> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i as u32))
            .collect();
        let identity = index[&backend.identity()];
        let inverse = elements.iter().map(|e| index[&backend.inv(e)]).collect();
        let generators = backend.generators().iter().map(|g| index[g]).collect();
        let n = elements.len();
        let table = (n <= TABLE_LIMIT && budget.check_u128((n * n) as u128).is_ok()).then(|| {
            let mut t = vec![0u32; n * n];
            for (i, a) in elements.iter().enumerate() {
                for (j, b) in elements.iter().enumerate() {
                    t[i * n + j] = index[&backend.mul(a, b)];
                }
            }
            t
        });
        Ok(FiniteGroup {
            backend,
            elements,
            index,
            inverse,
            identity,
            table,
            generators,
            classes: OnceLock::new(),
        })
    }

    pub fn from_spec(spec: &str, budget: Budget) -> Result<Self> {
        FiniteGroup::new(GroupBackend::parse(spec)?, budget)
    }

    pub fn backend(&self) -> &GroupBackend {
        &self.backend
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity_index(&self) -> u32 {
        self.identity
    }

    pub fn element(&self, i: u32) -> &Elem {
        &self.elements[i as usize]
    }

    pub fn elements(&self) -> &[Elem] {
        &self.elements
    }

    pub fn index_of(&self, e: &[u32]) -> Option<u32> {
        self.index.get(e).copied()
    }

    pub fn format(&self, i: u32) -> String {
        self.backend.format_element(&self.elements[i as usize])
    }

    pub fn parse_element(&self, text: &str) -> Result<u32> {
        let e = self.backend.parse_element(text)?;
        Ok(self.index[&e])
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    #[inline]
    pub fn mul_idx(&self, a: u32, b: u32) -> u32 {
        match &self.table {
            Some(t) => t[a as usize * self.elements.len() + b as usize],
            None => {
                let p = self
                    .backend
                    .mul(&self.elements[a as usize], &self.elements[b as usize]);
                self.index[&p]
            }
        }
    }

    #[inline]
    pub fn inv_idx(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    pub fn conjugate(&self, x: u32, by: u32) -> u32 {
        self.mul_idx(self.mul_idx(by, x), self.inv_idx(by))
    }

    pub fn is_abelian(&self) -> bool {
        self.generators.iter().all(|&a| {
            self.generators
                .iter()
                .all(|&b| self.mul_idx(a, b) == self.mul_idx(b, a))
        })
    }

    /// Order of every element, indexed like the elements.
    pub fn element_orders(&self, budget: Budget) -> Result<Vec<u64>> {
        budget.check_u128(self.order() as u128)?;
        Ok((0..self.order() as u32)
            .map(|g| {
                let mut k = 1;
                let mut x = g;
                while x != self.identity {
                    x = self.mul_idx(x, g);
                    k += 1;
                }
                k
            })
            .collect())
    }

    /// Conjugacy classes, computed on first use.
    pub fn conjugacy_data(&self, budget: Budget) -> Result<&ConjugacyData> {
        if let Some(c) = self.classes.get() {
            return Ok(c);
        }
        let required = 2 * self.order() as u128 * self.generators.len().max(1) as u128;
        budget.check_u128(required)?;
        let data = ConjugacyData::compute(self);
        Ok(self.classes.get_or_init(|| data))
    }

    /// Closure of `gens` together with its left cosets.
    pub fn subgroup_closure(&self, gens: &[u32], budget: Budget) -> Result<CosetSystem> {
        let required = self.order() as u128 * (gens.len() as u128 + 1);
        budget.check_u128(required)?;
        CosetSystem::compute(self, gens)
    }
}

impl GroupOps for FiniteGroup {
    type Elem = u32;

    fn identity(&self) -> u32 {
        self.identity
    }

    fn mul(&self, a: &u32, b: &u32) -> u32 {
        self.mul_idx(*a, *b)
    }

    fn inv(&self, a: &u32) -> u32 {
        self.inv_idx(*a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugacyClass {
    /// Minimal element of the class in the fixed element order.
    pub representative: u32,
    pub size: u64,
}

/// Conjugacy class decomposition; classes are sorted by representative.
#[derive(Debug, Clone)]
pub struct ConjugacyData {
    group_order: u64,
    classes: Vec<ConjugacyClass>,
    class_of: Vec<u32>,
}

impl ConjugacyData {
    fn compute(g: &FiniteGroup) -> Self {
        const UNSET: u32 = u32::MAX;
        let n = g.order();
        let mut class_of = vec![UNSET; n];
        let mut classes = Vec::new();
        let mut queue = VecDeque::new();
        // scanning in index order makes the first unseen element the class minimum
        for start in 0..n as u32 {
            if class_of[start as usize] != UNSET {
                continue;
            }
            let id = classes.len() as u32;
            class_of[start as usize] = id;
            queue.push_back(start);
            let mut size = 0u64;
            while let Some(x) = queue.pop_front() {
                size += 1;
                for &s in &g.generators {
                    let y = g.conjugate(x, s);
                    if class_of[y as usize] == UNSET {
                        class_of[y as usize] = id;
                        queue.push_back(y);
                    }
                }
            }
            classes.push(ConjugacyClass {
                representative: start,
                size,
            });
        }
        ConjugacyData {
            group_order: n as u64,
            classes,
            class_of,
        }
    }

    /// k(G).
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ConjugacyClass] {
        &self.classes
    }

    pub fn class_of(&self, element: u32) -> usize {
        self.class_of[element as usize] as usize
    }

    pub fn centralizer_order(&self, class: usize) -> u64 {
        self.group_order / self.classes[class].size
    }

    pub fn group_order(&self) -> u64 {
        self.group_order
    }
}

/// A subgroup given by generators, with its left cosets `g * H`.
#[derive(Debug, Clone)]
pub struct CosetSystem {
    pub generators: Vec<u32>,
    /// Subgroup elements, sorted.
    pub subgroup: Vec<u32>,
    /// Minimal element of each left coset, sorted.
    pub coset_reps: Vec<u32>,
    coset_of: Vec<u32>,
}

impl CosetSystem {
    fn compute(g: &FiniteGroup, gens: &[u32]) -> Result<Self> {
        let n = g.order();
        if let Some(&bad) = gens.iter().find(|&&x| x as usize >= n) {
            return Err(Error::invalid(format!("element index {bad} out of range")));
        }
        let mut seen = vec![false; n];
        let mut subgroup = vec![g.identity];
        seen[g.identity as usize] = true;
        let mut head = 0;
        while head < subgroup.len() {
            let x = subgroup[head];
            head += 1;
            for &s in gens {
                let y = g.mul_idx(x, s);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    subgroup.push(y);
                }
            }
        }
        subgroup.sort_unstable();

        const UNSET: u32 = u32::MAX;
        let mut coset_of = vec![UNSET; n];
        let mut coset_reps = Vec::new();
        for x in 0..n as u32 {
            if coset_of[x as usize] != UNSET {
                continue;
            }
            let id = coset_reps.len() as u32;
            coset_reps.push(x);
            for &h in &subgroup {
                coset_of[g.mul_idx(x, h) as usize] = id;
            }
        }
        Ok(CosetSystem {
            generators: gens.to_vec(),
            subgroup,
            coset_reps,
            coset_of,
        })
    }

    /// `[G : H]`.
    pub fn index(&self) -> usize {
        self.coset_reps.len()
    }

    pub fn subgroup_order(&self) -> usize {
        self.subgroup.len()
    }

    pub fn coset_of(&self, element: u32) -> usize {
        self.coset_of[element as usize] as usize
    }

    /// Elements of the left coset `rep * H`, in subgroup order.
    pub fn coset(&self, g: &FiniteGroup, rep: u32) -> Vec<u32> {
        self.subgroup.iter().map(|&h| g.mul_idx(rep, h)).collect()
    }
}
