//! Word-metric geometry on ℤᵈ: balls, boundaries, invariance ratios and boxes.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported rank of the lattice.
pub const MAX_DIM: usize = 4;

/// Element of ℤᵈ. The identity is the zero vector.
///
/// Ordering is lexicographic in the coordinates, which is the canonical
/// iteration order used everywhere.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupPoint {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl GroupPoint {
    pub fn new(coords: &[i32]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self { dim: coords.len() as u8, coords: c })
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self { dim: dim as u8, coords: [0; MAX_DIM] }
    }

    /// `value` times the `axis`-th basis vector.
    pub fn axis(dim: usize, axis: usize, value: i32) -> Self {
        let mut p = Self::zero(dim);
        p.coords[axis] = value;
        p
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn l1(&self) -> usize {
        self.coords().iter().map(|c| c.unsigned_abs() as usize).sum()
    }

    pub fn l_inf(&self) -> usize {
        self.coords().iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

impl Add for GroupPoint {
    type Output = GroupPoint;
    fn add(mut self, rhs: GroupPoint) -> GroupPoint {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for GroupPoint {
    type Output = GroupPoint;
    fn sub(mut self, rhs: GroupPoint) -> GroupPoint {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Neg for GroupPoint {
    type Output = GroupPoint;
    fn neg(mut self) -> GroupPoint {
        for c in self.coords.iter_mut() {
            *c = -*c;
        }
        self
    }
}

impl fmt::Debug for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for GroupPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        GroupPoint::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Finite subset of ℤᵈ, stored sorted and duplicate-free.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FiniteRegion {
    dim: usize,
    points: Vec<GroupPoint>,
}

impl FiniteRegion {
    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new() }
    }

    pub fn from_points(dim: usize, points: impl IntoIterator<Item = GroupPoint>) -> Result<Self> {
        let mut pts: Vec<GroupPoint> = points.into_iter().collect();
        if let Some(bad) = pts.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        pts.sort_unstable();
        pts.dedup();
        Ok(Self { dim, points: pts })
    }

    /// Same as `from_points` for callers that already guarantee the dimension.
    pub(crate) fn from_points_unchecked(dim: usize, points: impl IntoIterator<Item = GroupPoint>) -> Self {
        let mut pts: Vec<GroupPoint> = points.into_iter().collect();
        pts.sort_unstable();
        pts.dedup();
        Self { dim, points: pts }
    }

    /// The integer interval `[a, b)` in ℤ¹.
    pub fn interval(a: i32, b: i32) -> Self {
        Self::from_points_unchecked(1, (a..b).map(|x| GroupPoint::axis(1, 0, x)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GroupPoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupPoint> {
        self.points.iter()
    }

    pub fn contains(&self, g: &GroupPoint) -> bool {
        self.points.binary_search(g).is_ok()
    }

    /// Position of `g` in the canonical order.
    pub fn index_of(&self, g: &GroupPoint) -> Option<usize> {
        self.points.binary_search(g).ok()
    }

    pub fn translate(&self, g: GroupPoint) -> Self {
        // translation preserves lexicographic order
        Self { dim: self.dim, points: self.points.iter().map(|&p| p + g).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_points_unchecked(self.dim, self.points.iter().chain(other.points.iter()).copied())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self { dim: self.dim, points: self.points.iter().copied().filter(|p| other.contains(p)).collect() }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self { dim: self.dim, points: self.points.iter().copied().filter(|p| !other.contains(p)).collect() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.points.iter().all(|p| !big.contains(p))
    }

    /// Componentwise minimum and maximum, `None` when empty.
    pub fn bounds(&self) -> Option<(Vec<i32>, Vec<i32>)> {
        let first = self.points.first()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in &self.points {
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        Some((lo, hi))
    }

    /// True when the region is exactly its bounding box.
    pub fn is_box(&self) -> bool {
        match self.bounds() {
            None => false,
            Some((lo, hi)) => {
                let vol: usize = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).product();
                vol == self.len()
            }
        }
    }

    pub fn to_hash_set(&self) -> HashSet<GroupPoint> {
        self.points.iter().copied().collect()
    }
}

impl<'a> IntoIterator for &'a FiniteRegion {
    type Item = &'a GroupPoint;
    type IntoIter = std::slice::Iter<'a, GroupPoint>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

impl Serialize for FiniteRegion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteRegion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pts = Vec::<GroupPoint>::deserialize(d)?;
        let dim = pts.first().map(|p| p.dim()).ok_or_else(|| serde::de::Error::custom("empty region"))?;
        FiniteRegion::from_points(dim, pts).map_err(serde::de::Error::custom)
    }
}

/// ℤᵈ together with a finite symmetric generating set and its word metric.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupContext {
    dimension: usize,
    generators: Vec<GroupPoint>,
    standard: bool,
}

#[derive(Serialize, Deserialize)]
struct GroupContextRepr {
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<GroupPoint>>,
}

impl GroupContext {
    /// ℤᵈ with generators ±eᵢ, whose word metric is the L¹ norm.
    pub fn standard(dimension: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        let mut generators = Vec::with_capacity(2 * dimension);
        for i in 0..dimension {
            generators.push(GroupPoint::axis(dimension, i, 1));
            generators.push(GroupPoint::axis(dimension, i, -1));
        }
        generators.sort_unstable();
        Ok(Self { dimension, generators, standard: true })
    }

    /// ℤᵈ with a custom generating set, checked for symmetry and generation.
    pub fn with_generators(dimension: usize, generators: Vec<GroupPoint>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        let mut gens = generators;
        if let Some(bad) = gens.iter().find(|g| g.dim() != dimension) {
            return Err(Error::DimensionMismatch { expected: dimension, found: bad.dim() });
        }
        gens.retain(|g| !g.is_identity());
        gens.sort_unstable();
        gens.dedup();
        if gens.iter().any(|g| gens.binary_search(&-*g).is_err()) {
            return Err(Error::InvalidGenerators("not closed under inverse".into()));
        }
        let standard = Self::standard(dimension)?;
        if gens == standard.generators {
            return Ok(standard);
        }
        let ctx = Self { dimension, generators: gens, standard: false };
        // every basis vector must be reachable; sublattices are rejected
        let max_gen = ctx.generators.iter().map(|g| g.l1()).max().unwrap_or(0);
        let reach = ctx.bfs_ball(64.max(4 * max_gen)).to_hash_set();
        for i in 0..dimension {
            if !reach.contains(&GroupPoint::axis(dimension, i, 1)) {
                return Err(Error::InvalidGenerators(format!("e{i} not reachable; set does not generate")));
            }
        }
        Ok(ctx)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn generators(&self) -> &[GroupPoint] {
        &self.generators
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::zero(self.dimension)
    }

    /// Word length |g|.
    pub fn norm(&self, g: &GroupPoint) -> usize {
        if self.standard {
            return g.l1();
        }
        if g.is_identity() {
            return 0;
        }
        let mut seen: HashSet<GroupPoint> = HashSet::from([self.identity()]);
        let mut frontier = vec![self.identity()];
        let mut depth = 0;
        loop {
            depth += 1;
            let mut next = Vec::new();
            for p in &frontier {
                for &s in &self.generators {
                    let q = *p + s;
                    if q == *g {
                        return depth;
                    }
                    if seen.insert(q) {
                        next.push(q);
                    }
                }
            }
            frontier = next;
        }
    }

    /// Left-invariant distance d(g, h) = |g⁻¹h|.
    pub fn distance(&self, g: &GroupPoint, h: &GroupPoint) -> usize {
        self.norm(&(*h - *g))
    }

    /// The ball B_r around the identity.
    pub fn ball(&self, r: usize) -> FiniteRegion {
        if self.standard {
            let mut out = Vec::new();
            let mut cur = vec![0i32; self.dimension];
            l1_ball_rec(self.dimension, r as i32, 0, &mut cur, &mut out);
            FiniteRegion::from_points_unchecked(self.dimension, out)
        } else {
            self.bfs_ball(r)
        }
    }

    fn bfs_ball(&self, r: usize) -> FiniteRegion {
        let mut seen: HashSet<GroupPoint> = HashSet::from([self.identity()]);
        let mut queue = VecDeque::from([(self.identity(), 0usize)]);
        while let Some((p, d)) = queue.pop_front() {
            if d == r {
                continue;
            }
            for &s in &self.generators {
                let q = p + s;
                if seen.insert(q) {
                    queue.push_back((q, d + 1));
                }
            }
        }
        FiniteRegion::from_points_unchecked(self.dimension, seen)
    }

    /// F·B_r.
    pub fn dilate(&self, f: &FiniteRegion, r: usize) -> FiniteRegion {
        if r == 0 {
            return f.clone();
        }
        let ball = self.ball(r);
        let pts: HashSet<GroupPoint> = f.iter().flat_map(|&p| ball.iter().map(move |&b| p + b)).collect();
        FiniteRegion::from_points_unchecked(self.dimension, pts)
    }

    /// {g ∈ F : g·B_r ⊆ F}.
    pub fn erode(&self, f: &FiniteRegion, r: usize) -> FiniteRegion {
        let ball = self.ball(r);
        let set = f.to_hash_set();
        FiniteRegion::from_points_unchecked(
            self.dimension,
            f.iter().copied().filter(|&p| ball.iter().all(|&b| set.contains(&(p + b)))),
        )
    }

    /// ∂_rF = {g : g·B_r meets both F and its complement}.
    pub fn boundary(&self, f: &FiniteRegion, r: usize) -> Result<FiniteRegion> {
        if f.is_empty() {
            return Err(Error::EmptyRegion);
        }
        self.check_dim(f)?;
        let ball = self.ball(r);
        let set = f.to_hash_set();
        let candidates = self.dilate(f, r);
        let out = candidates.iter().copied().filter(|&g| {
            let mut inside = false;
            let mut outside = false;
            for &b in ball.iter() {
                if set.contains(&(g + b)) {
                    inside = true;
                } else {
                    outside = true;
                }
                if inside && outside {
                    return true;
                }
            }
            false
        });
        Ok(FiniteRegion::from_points_unchecked(self.dimension, out))
    }

    /// ρ_r(F) = |∂_rF| / |F| as an exact fraction.
    pub fn boundary_ratio(&self, f: &FiniteRegion, r: usize) -> Result<Ratio<usize>> {
        let b = self.boundary(f, r)?;
        Ok(Ratio::new(b.len(), f.len()))
    }

    /// Axis-aligned box `offset + Π [0, sᵢ)`.
    pub fn box_region(&self, sides: &[usize], offset: GroupPoint) -> Result<FiniteRegion> {
        if sides.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: sides.len() });
        }
        if offset.dim() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: offset.dim() });
        }
        if let Some(i) = sides.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter { name: "side_lengths", reason: format!("side {i} is zero") });
        }
        Ok(box_points(sides, offset))
    }

    pub(crate) fn check_dim(&self, f: &FiniteRegion) -> Result<()> {
        if f.dim() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: f.dim() });
        }
        Ok(())
    }
}

pub(crate) fn box_points(sides: &[usize], offset: GroupPoint) -> FiniteRegion {
    let dim = sides.len();
    let total: usize = sides.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let c: Vec<i32> = idx.iter().map(|&i| i as i32).collect();
        out.push(GroupPoint::new(&c).expect("dimension checked") + offset);
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < sides[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    FiniteRegion::from_points_unchecked(dim, out)
}

fn l1_ball_rec(dim: usize, budget: i32, axis: usize, cur: &mut Vec<i32>, out: &mut Vec<GroupPoint>) {
    if axis == dim {
        out.push(GroupPoint::new(cur).expect("dimension checked"));
        return;
    }
    for v in -budget..=budget {
        cur[axis] = v;
        l1_ball_rec(dim, budget - v.abs(), axis + 1, cur, out);
    }
    cur[axis] = 0;
}

impl Serialize for GroupContext {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupContextRepr { dimension: self.dimension, generators: Some(self.generators.clone()) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupContext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GroupContextRepr::deserialize(d)?;
        match repr.generators {
            None => GroupContext::standard(repr.dimension),
            Some(g) => GroupContext::with_generators(repr.dimension, g),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z1() -> GroupContext {
        GroupContext::standard(1).unwrap()
    }

    fn z2() -> GroupContext {
        GroupContext::standard(2).unwrap()
    }

    fn pt(c: &[i32]) -> GroupPoint {
        GroupPoint::new(c).unwrap()
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(z1().ball(2), FiniteRegion::interval(-2, 3));
        assert_eq!(z2().ball(1).len(), 5);
        assert_eq!(z2().ball(2).len(), 13);
        assert_eq!(z2().ball(0).points(), &[pt(&[0, 0])]);
    }

    #[test]
    fn boundary_examples() {
        let ctx = z1();
        let b = ctx.boundary(&FiniteRegion::interval(0, 10), 1).unwrap();
        let got: Vec<i32> = b.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(got, vec![-1, 0, 9, 10]);
        let b = ctx.boundary(&FiniteRegion::interval(0, 1), 1).unwrap();
        assert_eq!(b, FiniteRegion::interval(-1, 2));
        let sq = z2().box_region(&[10, 10], pt(&[0, 0])).unwrap();
        assert_eq!(z2().boundary(&sq, 1).unwrap().len(), 76);
        assert_eq!(z2().boundary_ratio(&sq, 1).unwrap(), Ratio::new(76, 100));
        assert_eq!(ctx.boundary_ratio(&FiniteRegion::interval(0, 10), 1).unwrap(), Ratio::new(4, 10));
        assert!(matches!(ctx.boundary(&FiniteRegion::empty(1), 1), Err(Error::EmptyRegion)));
    }

    #[test]
    fn boxes() {
        let ctx = z2();
        assert_eq!(ctx.box_region(&[3, 3], pt(&[0, 0])).unwrap().len(), 9);
        assert_eq!(ctx.box_region(&[1, 1], pt(&[2, 3])).unwrap().points(), &[pt(&[2, 3])]);
        assert_eq!(z1().box_region(&[10], pt(&[5])).unwrap(), FiniteRegion::interval(5, 15));
        assert!(ctx.box_region(&[3], pt(&[0, 0])).is_err());
        assert!(ctx.box_region(&[0, 3], pt(&[0, 0])).is_err());
    }

    #[test]
    fn erode_dilate() {
        let ctx = z1();
        let f = FiniteRegion::interval(0, 10);
        assert_eq!(ctx.erode(&f, 2), FiniteRegion::interval(2, 8));
        assert_eq!(ctx.dilate(&f, 2), FiniteRegion::interval(-2, 12));
    }

    #[test]
    fn custom_generators() {
        let gens = vec![pt(&[1]), pt(&[-1]), pt(&[2]), pt(&[-2])];
        let ctx = GroupContext::with_generators(1, gens).unwrap();
        assert!(!ctx.is_standard());
        assert_eq!(ctx.ball(1), FiniteRegion::interval(-2, 3));
        assert_eq!(ctx.norm(&pt(&[5])), 3);
        assert!(GroupContext::with_generators(1, vec![pt(&[2]), pt(&[-2])]).is_err());
        assert!(GroupContext::with_generators(1, vec![pt(&[1])]).is_err());
        let same = GroupContext::with_generators(2, vec![pt(&[1, 0]), pt(&[-1, 0]), pt(&[0, 1]), pt(&[0, -1])]).unwrap();
        assert!(same.is_standard());
    }

    #[test]
    fn serde_roundtrip() {
        let f = z2().box_region(&[2, 2], pt(&[1, 1])).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, "[[1,1],[1,2],[2,1],[2,2]]");
        let back: FiniteRegion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let ctx: GroupContext = serde_json::from_str(r#"{"dimension": 2}"#).unwrap();
        assert!(ctx.is_standard());
    }
}
