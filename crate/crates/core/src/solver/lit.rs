use crate::cnf::Literal;

/// Internal literal code: `2 * var + (negative as u32)` over 0-based variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Lit(pub(crate) u32);

impl Lit {
    #[inline]
    pub(crate) fn new(var: usize, sign: bool) -> Lit {
        Lit(((var as u32) << 1) | (!sign) as u32)
    }

    #[inline]
    pub(crate) fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    /// `true` for positive literals.
    #[inline]
    pub(crate) fn sign(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub(crate) fn idx(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn to_literal(self) -> Literal {
        Literal::new(self.var() as u32 + 1, self.sign())
    }

    pub(crate) fn from_literal(l: Literal) -> Lit {
        Lit::new(l.var as usize - 1, l.sign)
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}
