/// Index bookkeeping for splitting a product basis into kept and traced
/// factors. Digit 0 is the most significant.
#[derive(Debug, Clone)]
pub(crate) struct FactorSplit {
    pub keep_dim: usize,
    pub rest_dim: usize,
    pub keep_of: Vec<usize>,
    pub rest_of: Vec<usize>,
    full_of: Vec<usize>,
}

impl FactorSplit {
    pub fn new(n_sites: usize, d: usize, keep: &[usize]) -> FactorSplit {
        let full = d.pow(n_sites as u32);
        let keep_dim = d.pow(keep.len() as u32);
        let rest_dim = full / keep_dim;
        let mut is_kept = vec![false; n_sites];
        for &p in keep {
            is_kept[p] = true;
        }
        let mut keep_of = vec![0; full];
        let mut rest_of = vec![0; full];
        let mut full_of = vec![0; full];
        for i in 0..full {
            let (mut k, mut e) = (0, 0);
            let mut rem = i;
            let mut place = full;
            for kept in &is_kept {
                place /= d;
                let digit = rem / place;
                rem %= place;
                if *kept {
                    k = k * d + digit;
                } else {
                    e = e * d + digit;
                }
            }
            keep_of[i] = k;
            rest_of[i] = e;
            full_of[k * rest_dim + e] = i;
        }
        FactorSplit {
            keep_dim,
            rest_dim,
            keep_of,
            rest_of,
            full_of,
        }
    }

    #[inline]
    pub fn compose(&self, keep: usize, rest: usize) -> usize {
        self.full_of[keep * self.rest_dim + rest]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = FactorSplit::new(4, 3, &[1, 3]);
        assert_eq!(s.keep_dim, 9);
        assert_eq!(s.rest_dim, 9);
        for i in 0..81 {
            assert_eq!(s.compose(s.keep_of[i], s.rest_of[i]), i);
        }
        // digits (2,1,0,2): kept (1,2), rest (2,0)
        let i = 2 * 27 + 9 + 2;
        assert_eq!(s.keep_of[i], 5);
        assert_eq!(s.rest_of[i], 6);
    }
}
