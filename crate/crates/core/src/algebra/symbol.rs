use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use once_cell::sync::Lazy;

struct Registry {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

static REGISTRY: Lazy<RwLock<Registry>> = Lazy::new(|| {
    RwLock::new(Registry {
        names: Vec::new(),
        ids: HashMap::new(),
    })
});

/// Interned name of a formal parameter (`hbar`, `m`, `a1`, ...).
///
/// Ordering follows interning order, which is only used for internal map
/// layout; anything user-visible sorts by [`Symbol::name`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    pub fn new(name: &str) -> Symbol {
        if let Some(&id) = REGISTRY
            .read()
            .expect("symbol registry poisoned")
            .ids
            .get(name)
        {
            return Symbol(id);
        }
        let mut reg = REGISTRY.write().expect("symbol registry poisoned");
        if let Some(&id) = reg.ids.get(name) {
            return Symbol(id);
        }
        let id = reg.names.len() as u32;
        reg.names.push(name.to_string());
        reg.ids.insert(name.to_string(), id);
        Symbol(id)
    }

    pub fn name(&self) -> String {
        REGISTRY.read().expect("symbol registry poisoned").names[self.0 as usize].clone()
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
