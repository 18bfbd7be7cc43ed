//! Global variable interner.
//!
//! Every polynomial in the engine refers to variables by `VarId`. Ids are
//! assigned on first registration and are stable for the lifetime of the
//! process. All registrations happen during setup (curve load, engine
//! construction), before any parallel work, so canonical forms are
//! reproducible for a given command regardless of thread count.

use std::sync::{OnceLock, RwLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

fn registry() -> &'static RwLock<Vec<String>> {
    static REG: OnceLock<RwLock<Vec<String>>> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(Vec::new()))
}

/// Intern a variable name, returning its id.
pub fn var(name: &str) -> VarId {
    {
        let reg = registry().read().unwrap();
        if let Some(i) = reg.iter().position(|n| n == name) {
            return VarId(i as u32);
        }
    }
    let mut reg = registry().write().unwrap();
    if let Some(i) = reg.iter().position(|n| n == name) {
        return VarId(i as u32);
    }
    reg.push(name.to_string());
    VarId((reg.len() - 1) as u32)
}

/// Name of an interned variable.
pub fn var_name(id: VarId) -> String {
    registry().read().unwrap()[id.0 as usize].clone()
}

/// Look up a variable by name without registering it.
pub fn lookup(name: &str) -> Option<VarId> {
    let reg = registry().read().unwrap();
    reg.iter().position(|n| n == name).map(|i| VarId(i as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intern_is_idempotent() {
        let a = var("intern_test_x");
        let b = var("intern_test_x");
        assert_eq!(a, b);
        assert_eq!(var_name(a), "intern_test_x");
    }
}
