use std::fmt;

/// Join-semilattice with a least element.
pub trait Lattice: Sized {
    fn bottom() -> Self;
    fn join(&self, other: &Self) -> Self;
    fn leq(&self, other: &Self) -> bool;

    /// Joins `other` into `self`, reporting whether `self` grew.
    fn join_in_place(&mut self, other: &Self) -> bool
    where
        Self: PartialEq,
    {
        let joined = self.join(other);
        if joined == *self {
            false
        } else {
            *self = joined;
            true
        }
    }
}

/// Bot below pairwise-incomparable constants below Top.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flat<T> {
    #[default]
    Bot,
    Exactly(T),
    Top,
}

impl<T: Clone + Eq> Flat<T> {
    pub fn is_bot(&self) -> bool {
        matches!(self, Flat::Bot)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Flat::Top)
    }

    pub fn exact(&self) -> Option<&T> {
        match self {
            Flat::Exactly(v) => Some(v),
            _ => None,
        }
    }

    /// Applies a binary operation; any Top operand gives Top, a Bot operand
    /// gives Bot, and an undefined result (`None`) gives Bot.
    pub fn lift2<U, R: Clone + Eq>(
        &self,
        other: &Flat<U>,
        f: impl FnOnce(&T, &U) -> Option<R>,
    ) -> Flat<R> {
        match (self, other) {
            (Flat::Bot, _) | (_, Flat::Bot) => Flat::Bot,
            (Flat::Top, _) | (_, Flat::Top) => Flat::Top,
            (Flat::Exactly(a), Flat::Exactly(b)) => match f(a, b) {
                Some(r) => Flat::Exactly(r),
                None => Flat::Bot,
            },
        }
    }

    pub fn map<R>(&self, f: impl FnOnce(&T) -> R) -> Flat<R> {
        match self {
            Flat::Bot => Flat::Bot,
            Flat::Top => Flat::Top,
            Flat::Exactly(v) => Flat::Exactly(f(v)),
        }
    }
}

impl<T: Clone + Eq> Lattice for Flat<T> {
    fn bottom() -> Self {
        Flat::Bot
    }

    fn join(&self, other: &Self) -> Self {
        match (self, other) {
            (Flat::Bot, x) | (x, Flat::Bot) => x.clone(),
            (Flat::Exactly(a), Flat::Exactly(b)) if a == b => self.clone(),
            _ => Flat::Top,
        }
    }

    fn leq(&self, other: &Self) -> bool {
        match (self, other) {
            (Flat::Bot, _) | (_, Flat::Top) => true,
            (Flat::Exactly(a), Flat::Exactly(b)) => a == b,
            _ => false,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Flat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flat::Bot => f.write_str("⊥"),
            Flat::Exactly(v) => write!(f, "{v}"),
            Flat::Top => f.write_str("⊤"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_laws() {
        let a = Flat::Exactly(1);
        let b = Flat::Exactly(2);
        assert_eq!(a.join(&b), Flat::Top);
        assert_eq!(a.join(&Flat::Bot), a);
        assert_eq!(a.join(&Flat::Top), Flat::Top);
        assert_eq!(a.join(&a), a);
        assert!(a.leq(&Flat::Top));
        assert!(!a.leq(&b));
        assert!(Flat::<i32>::Bot.leq(&a));
    }

    #[test]
    fn lift2_propagates_top_and_bot() {
        let add = |x: &i64, y: &i64| Some(x + y);
        assert_eq!(Flat::Exactly(2).lift2(&Flat::Exactly(3), add), Flat::Exactly(5));
        assert_eq!(Flat::Top.lift2(&Flat::Exactly(3), add), Flat::Top);
        assert_eq!(Flat::Bot.lift2(&Flat::Top, add), Flat::<i64>::Bot);
        assert_eq!(
            Flat::Exactly(1).lift2(&Flat::Exactly(0), |x: &i64, y: &i64| x.checked_div(*y)),
            Flat::Bot
        );
    }
}
