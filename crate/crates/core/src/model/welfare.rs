//! Allocation bookkeeping: utilities, welfare and the accounting identity.

use super::profile::ValuationProfile;

/// Final outcome of an auction run.
#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    /// Items won by each player (all of them are tracked; value is the best one).
    Matching { won: Vec<Vec<usize>>, payments: Vec<f64> },
    /// Whether each ground-set element (player) is served.
    Matroid { served: Vec<bool>, payments: Vec<f64> },
}

impl Allocation {
    pub fn empty_matching(players: usize) -> Self {
        Allocation::Matching { won: vec![Vec::new(); players], payments: vec![0.0; players] }
    }

    pub fn empty_matroid(players: usize) -> Self {
        Allocation::Matroid { served: vec![false; players], payments: vec![0.0; players] }
    }

    pub fn payments(&self) -> &[f64] {
        match self {
            Allocation::Matching { payments, .. } | Allocation::Matroid { payments, .. } => payments,
        }
    }

    pub fn players(&self) -> usize {
        self.payments().len()
    }

    pub fn payment(&self, player: usize) -> f64 {
        self.payments()[player]
    }

    pub fn revenue(&self) -> f64 {
        self.payments().iter().sum()
    }

    pub fn has_won(&self, player: usize) -> bool {
        match self {
            Allocation::Matching { won, .. } => !won[player].is_empty(),
            Allocation::Matroid { served, .. } => served[player],
        }
    }

    /// Value the player derives from what it holds (free disposal for matching).
    pub fn allocated_value(&self, profile: &ValuationProfile, player: usize) -> f64 {
        match self {
            Allocation::Matching { won, .. } => {
                won[player].iter().map(|&j| profile.value(player, j)).fold(0.0, f64::max)
            }
            Allocation::Matroid { served, .. } => {
                if served[player] {
                    profile.scalar(player)
                } else {
                    0.0
                }
            }
        }
    }

    /// Records a win at `price`. `item` is ignored for matroid allocations.
    pub fn award(&mut self, player: usize, item: usize, price: f64) {
        match self {
            Allocation::Matching { won, payments } => {
                won[player].push(item);
                payments[player] += price;
            }
            Allocation::Matroid { served, payments } => {
                served[player] = true;
                payments[player] += price;
            }
        }
    }

    pub fn served_set(&self) -> Vec<usize> {
        (0..self.players()).filter(|&i| self.has_won(i)).collect()
    }
}

pub fn utility(profile: &ValuationProfile, alloc: &Allocation, player: usize) -> f64 {
    alloc.allocated_value(profile, player) - alloc.payment(player)
}

/// Total allocated value; payments cancel between players and auctioneer.
pub fn social_welfare(profile: &ValuationProfile, alloc: &Allocation) -> f64 {
    (0..alloc.players()).map(|i| alloc.allocated_value(profile, i)).sum()
}

/// `SW - (sum of utilities + revenue)`; zero up to floating-point rounding.
pub fn accounting_residual(profile: &ValuationProfile, alloc: &Allocation) -> f64 {
    let u: f64 = (0..alloc.players()).map(|i| utility(profile, alloc, i)).sum();
    social_welfare(profile, alloc) - (u + alloc.revenue())
}
