//! Controllers behind a common trait, looked up by name at runtime.

mod swing_damping;

use std::collections::BTreeMap;
use std::fmt;

pub use swing_damping::{
    auxiliary_input, control_input, reduced_dynamics, sign, swing_damping_law, Alpha2Rule, ControllerGains,
    NamedAlpha2, ReducedDynamics, Reference,
};

use crate::error::{CraneError, Result};
use crate::model::{ActuationInput, CraneParameters, GeneralizedState};

/// State-feedback law producing the commanded actuation.
pub trait Controller: Send + Sync {
    fn name(&self) -> &str;

    fn actuation(&self, t: f64, state: &GeneralizedState, params: &CraneParameters) -> Result<ActuationInput>;
}

/// Everything a factory may need to build a controller.
#[derive(Debug, Clone, Copy)]
pub struct ControllerSpec {
    pub gains: ControllerGains,
    pub reference: Reference,
}

pub type ControllerFactory = Box<dyn Fn(&ControllerSpec) -> Result<Box<dyn Controller>> + Send + Sync>;

pub struct ControllerRegistry {
    factories: BTreeMap<String, ControllerFactory>,
}

impl ControllerRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// Registry holding `swing_damping`, `actuated_only` and `passive`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(SwingDamping::NAME, |spec| {
            spec.gains.validate()?;
            Ok(Box::new(SwingDamping { gains: spec.gains, reference: spec.reference }))
        });
        reg.register(ActuatedOnly::NAME, |spec| {
            spec.gains.validate()?;
            Ok(Box::new(ActuatedOnly::new(spec.gains, spec.reference)))
        });
        reg.register(Passive::NAME, |_| Ok(Box::new(Passive)));
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&ControllerSpec) -> Result<Box<dyn Controller>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_owned(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, spec: &ControllerSpec) -> Result<Box<dyn Controller>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            CraneError::Config(format!("unknown controller {name:?}; known: {}", known.join(", ")))
        })?;
        factory(spec)
    }
}

impl Default for ControllerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for ControllerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

/// Feedback linearization of slew, luff and hoist plus sway damping.
#[derive(Debug, Clone, Copy)]
pub struct SwingDamping {
    pub gains: ControllerGains,
    pub reference: Reference,
}

impl SwingDamping {
    pub const NAME: &'static str = "swing_damping";
}

impl Controller for SwingDamping {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn actuation(&self, _t: f64, state: &GeneralizedState, params: &CraneParameters) -> Result<ActuationInput> {
        swing_damping_law(state, &self.reference, &self.gains, params)
    }
}

/// The same law with the sway weighting switched off.
#[derive(Debug, Clone, Copy)]
pub struct ActuatedOnly(SwingDamping);

impl ActuatedOnly {
    pub const NAME: &'static str = "actuated_only";

    pub fn new(mut gains: ControllerGains, reference: Reference) -> Self {
        gains.alpha1 = 0.0;
        gains.alpha2 = Alpha2Rule::Fixed(0.0);
        Self(SwingDamping { gains, reference })
    }
}

impl Controller for ActuatedOnly {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn actuation(&self, t: f64, state: &GeneralizedState, params: &CraneParameters) -> Result<ActuationInput> {
        self.0.actuation(t, state, params)
    }
}

/// Zero input; the crane moves under gravity alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct Passive;

impl Passive {
    pub const NAME: &'static str = "passive";
}

impl Controller for Passive {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn actuation(&self, _t: f64, _state: &GeneralizedState, _params: &CraneParameters) -> Result<ActuationInput> {
        Ok(ActuationInput::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ControllerSpec {
        ControllerSpec { gains: ControllerGains::nk1000(), reference: Reference::set_point(0.0, 0.5, 4.0).unwrap() }
    }

    #[test]
    fn builtins_are_registered_by_name() {
        let reg = ControllerRegistry::with_builtins();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["actuated_only", "passive", "swing_damping"]);
        for name in ["actuated_only", "passive", "swing_damping"] {
            assert_eq!(reg.build(name, &spec()).unwrap().name(), name);
        }
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let err = ControllerRegistry::with_builtins().build("lqr", &spec()).err().unwrap().to_string();
        assert!(err.contains("lqr") && err.contains("swing_damping"), "{err}");
    }

    #[test]
    fn custom_controllers_can_be_registered() {
        struct Hold;
        impl Controller for Hold {
            fn name(&self) -> &str {
                "hold"
            }
            fn actuation(&self, _: f64, _: &GeneralizedState, _: &CraneParameters) -> Result<ActuationInput> {
                Ok(ActuationInput::zero())
            }
        }
        let mut reg = ControllerRegistry::empty();
        reg.register("hold", |_| Ok(Box::new(Hold)));
        assert_eq!(reg.build("hold", &spec()).unwrap().name(), "hold");
    }
}
