//! Scenario files: TOML with the unit in every physical field name.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::actuator::{build_model, ActuatorParams, ActuatorVariant, ContinuousActuatorModel};
use crate::error::{Error, Result};
use crate::linearization::{static_equilibrium, BaselineVelocity};
use crate::lp::{BackendKind, ConstraintSet, CostSpec, Objective};
use crate::oracle::{chirp_input, TestInput};
use crate::robot::{
    ConstantPlant, ContactModel, RobotPort, SingleDofArm, SingleDofArmParams, Transmission, TwoLinkLeg,
    TwoLinkLegParams, GRAVITY,
};
use crate::slp::{SlpConfig, SlpProblem};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorConfig {
    pub spring_mass_kg: f64,
    pub stiffness_n_per_m: f64,
    pub spring_damping_ns_per_m: f64,
    pub motor_mass_kg: f64,
    pub motor_damping_ns_per_m: f64,
    pub motor_constant_n_per_a: f64,
    pub load_mass_kg: f64,
    pub load_damping_ns_per_m: f64,
    pub pseudo_mass_kg: f64,
}

impl ActuatorConfig {
    pub fn params(&self) -> ActuatorParams {
        ActuatorParams {
            spring_mass: self.spring_mass_kg,
            stiffness: self.stiffness_n_per_m,
            spring_damping: self.spring_damping_ns_per_m,
            motor_mass: self.motor_mass_kg,
            motor_damping: self.motor_damping_ns_per_m,
            motor_constant: self.motor_constant_n_per_a,
            load_mass: self.load_mass_kg,
            load_damping: self.load_damping_ns_per_m,
            pseudo_mass: self.pseudo_mass_kg,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransmissionConfig {
    Linear {
        z_ref_m: f64,
        q_ref_rad: f64,
        arm_m_per_rad: f64,
    },
    Quadratic {
        z_ref_m: f64,
        q_ref_rad: f64,
        arm_m_per_rad: f64,
        curvature_m_per_rad2: f64,
    },
    Lever {
        a_m: f64,
        b_m: f64,
        c_m: f64,
        sign: f64,
        offset_rad: f64,
    },
}

impl TransmissionConfig {
    pub fn transmission(&self) -> Transmission {
        match *self {
            TransmissionConfig::Linear {
                z_ref_m,
                q_ref_rad,
                arm_m_per_rad,
            } => Transmission::Linear {
                z_ref: z_ref_m,
                q_ref: q_ref_rad,
                arm: arm_m_per_rad,
            },
            TransmissionConfig::Quadratic {
                z_ref_m,
                q_ref_rad,
                arm_m_per_rad,
                curvature_m_per_rad2,
            } => Transmission::Quadratic {
                z_ref: z_ref_m,
                q_ref: q_ref_rad,
                arm: arm_m_per_rad,
                curvature: curvature_m_per_rad2,
            },
            TransmissionConfig::Lever {
                a_m,
                b_m,
                c_m,
                sign,
                offset_rad,
            } => Transmission::Lever {
                a: a_m,
                b: b_m,
                c: c_m,
                sign,
                offset: offset_rad,
            },
        }
    }
}

fn default_gravity() -> f64 {
    GRAVITY
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    TwoLinkLeg {
        m1_kg: f64,
        m2_kg: f64,
        i1_kg_m2: f64,
        i2_kg_m2: f64,
        l1_m: f64,
        l2_m: f64,
        lc1_m: f64,
        lc2_m: f64,
        #[serde(default)]
        ankle_height_m: f64,
        #[serde(default = "default_gravity")]
        gravity_m_per_s2: f64,
        transmissions: Vec<TransmissionConfig>,
    },
    SingleDofArm {
        inertia_kg_m2: f64,
        mass_kg: f64,
        com_distance_m: f64,
        #[serde(default = "default_gravity")]
        gravity_m_per_s2: f64,
        transmission: TransmissionConfig,
    },
    /// Constant inertia and constant generalized load per joint.
    Constant {
        inertia_kg_m2: Vec<f64>,
        load_n_m: Vec<f64>,
        transmissions: Vec<TransmissionConfig>,
    },
}

impl PlantConfig {
    pub fn build(&self) -> Result<Arc<dyn RobotPort>> {
        Ok(match self {
            PlantConfig::TwoLinkLeg {
                m1_kg,
                m2_kg,
                i1_kg_m2,
                i2_kg_m2,
                l1_m,
                l2_m,
                lc1_m,
                lc2_m,
                ankle_height_m,
                gravity_m_per_s2,
                transmissions,
            } => {
                if transmissions.len() != 2 {
                    return Err(Error::Scenario("two_link_leg needs exactly 2 transmissions".into()));
                }
                for (name, v) in [("m1_kg", m1_kg), ("m2_kg", m2_kg), ("l1_m", l1_m), ("l2_m", l2_m)] {
                    if !(*v > 0.0) {
                        return Err(Error::Scenario(format!("plant.{name} must be positive")));
                    }
                }
                Arc::new(TwoLinkLeg::new(TwoLinkLegParams {
                    m1: *m1_kg,
                    m2: *m2_kg,
                    i1: *i1_kg_m2,
                    i2: *i2_kg_m2,
                    l1: *l1_m,
                    l2: *l2_m,
                    lc1: *lc1_m,
                    lc2: *lc2_m,
                    ankle_height: *ankle_height_m,
                    gravity: *gravity_m_per_s2,
                    transmissions: [transmissions[0].transmission(), transmissions[1].transmission()],
                }))
            }
            PlantConfig::SingleDofArm {
                inertia_kg_m2,
                mass_kg,
                com_distance_m,
                gravity_m_per_s2,
                transmission,
            } => {
                if !(*inertia_kg_m2 > 0.0) {
                    return Err(Error::Scenario("plant.inertia_kg_m2 must be positive".into()));
                }
                Arc::new(SingleDofArm::new(SingleDofArmParams {
                    inertia: *inertia_kg_m2,
                    mass: *mass_kg,
                    com_distance: *com_distance_m,
                    gravity: *gravity_m_per_s2,
                    transmission: transmission.transmission(),
                }))
            }
            PlantConfig::Constant {
                inertia_kg_m2,
                load_n_m,
                transmissions,
            } => {
                let p = inertia_kg_m2.len();
                if load_n_m.len() != p || transmissions.len() != p {
                    return Err(Error::Scenario("constant plant lists must have equal length".into()));
                }
                if inertia_kg_m2.iter().any(|&i| !(i > 0.0)) {
                    return Err(Error::Scenario("plant.inertia_kg_m2 entries must be positive".into()));
                }
                Arc::new(ConstantPlant::new(
                    DMatrix::from_diagonal(&DVector::from_column_slice(inertia_kg_m2)),
                    DVector::from_column_slice(load_n_m),
                    transmissions.iter().map(TransmissionConfig::transmission).collect(),
                ))
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    pub mu: f64,
    pub toe_x_m: f64,
    pub heel_x_m: f64,
    #[serde(default)]
    pub ankle_height_m: f64,
}

/// How springs are loaded at the initial pose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSprings {
    /// Static equilibrium: springs carry the gravity load, holding current applied.
    #[default]
    Loaded,
    /// Springs undeflected, everything at rest, no holding current.
    Relaxed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub delta_bar_m: f64,
    pub z_min_m: Vec<f64>,
    pub z_max_m: Vec<f64>,
    pub ydot_bar_m_per_s: f64,
    pub u_bar_a: f64,
    pub trust_radius_m: f64,
    pub initial_q_rad: Vec<f64>,
    #[serde(default)]
    pub initial_springs: InitialSprings,
    /// Terminal joint configuration; omitted leaves the end free.
    #[serde(default)]
    pub final_q_rad: Option<Vec<f64>>,
    #[serde(default)]
    pub zero_final_com_x_velocity: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceCurrent {
    /// Static holding current at the initial pose.
    #[default]
    Static,
    Zero,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub objective: Objective,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub reference_current: ReferenceCurrent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlpSection {
    pub steps: usize,
    pub dt_s: f64,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default)]
    pub baseline_velocity: BaselineVelocity,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub retry_halve_trust: bool,
}

fn default_substeps() -> usize {
    20
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub pseudo_mass_grid_kg: Vec<f64>,
    /// Pseudo-mass the orderings are checked against.
    pub tuned_pseudo_mass_kg: f64,
    pub operating_q_rad: Vec<Vec<f64>>,
    pub chirp_amplitude_a: f64,
    pub chirp_start_hz: f64,
    pub chirp_end_hz: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            substeps: default_substeps(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// One entry per joint.
    pub actuators: Vec<ActuatorConfig>,
    pub plant: PlantConfig,
    #[serde(default)]
    pub contact: Option<ContactConfig>,
    pub constraints: ConstraintConfig,
    pub cost: CostConfig,
    pub slp: SlpSection,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn joints(&self) -> usize {
        self.actuators.len()
    }

    pub fn actuator_params(&self) -> Vec<ActuatorParams> {
        self.actuators.iter().map(ActuatorConfig::params).collect()
    }

    pub fn contact_model(&self) -> Option<ContactModel> {
        self.contact.as_ref().map(|c| ContactModel {
            mu: c.mu,
            toe_x: c.toe_x_m,
            heel_x: c.heel_x_m,
            ankle_height: c.ankle_height_m,
        })
    }

    /// Schema-level checks that need no model construction.
    pub fn validate(&self) -> Result<()> {
        let p = self.joints();
        let err = |m: String| Err(Error::Scenario(m));
        if p == 0 {
            return err("at least one actuator is required".into());
        }
        let c = &self.constraints;
        for (name, len) in [
            ("constraints.z_min_m", c.z_min_m.len()),
            ("constraints.z_max_m", c.z_max_m.len()),
            ("constraints.initial_q_rad", c.initial_q_rad.len()),
        ] {
            if len != p {
                return err(format!("{name} has {len} entries, expected {p}"));
            }
        }
        if let Some(f) = &c.final_q_rad {
            if f.len() != p {
                return err(format!("constraints.final_q_rad has {} entries, expected {p}", f.len()));
            }
        }
        for (i, a) in self.actuators.iter().enumerate() {
            a.params().validate(i)?;
        }
        if let Some(t) = &self.tune {
            if t.pseudo_mass_grid_kg.is_empty() {
                return err("tune.pseudo_mass_grid_kg is empty".into());
            }
            if t.operating_q_rad.iter().any(|q| q.len() != p) {
                return err(format!("tune.operating_q_rad entries need {p} angles"));
            }
        }
        if self.contact.is_some() && p != 2 {
            return err("contacts are only supported on the two-link leg".into());
        }
        let plant = self.plant.build()?;
        if plant.dof() != p {
            return err(format!("plant has {} joints but {p} actuators are listed", plant.dof()));
        }
        if let Some(cm) = self.contact_model() {
            cm.validate()?;
        }
        self.slp_config().validate()?;
        Ok(())
    }

    pub fn slp_config(&self) -> SlpConfig {
        SlpConfig {
            steps: self.slp.steps,
            dt: self.slp.dt_s,
            tol: self.slp.tol,
            max_iter: self.slp.max_iter,
            baseline_velocity: self.slp.baseline_velocity,
            backend: self.slp.backend,
            retry_halve_trust: self.slp.retry_halve_trust,
        }
    }

    pub fn model(&self, variant: ActuatorVariant) -> Result<ContinuousActuatorModel> {
        build_model(variant, &self.actuator_params())
    }

    /// Initial actuator state and the reference current for `model`.
    pub fn initial_state(&self, model: &ContinuousActuatorModel, plant: &dyn RobotPort) -> Result<(DVector<f64>, DVector<f64>)> {
        let q0 = DVector::from_column_slice(&self.constraints.initial_q_rad);
        let z0 = plant.length_from_joint(&q0)?;
        let (x_static, u_static) = static_equilibrium(model, plant, &z0)?;
        let x0 = match self.constraints.initial_springs {
            InitialSprings::Loaded => x_static,
            InitialSprings::Relaxed => model.static_state(&z0, &DVector::zeros(model.joints())).0,
        };
        let u_ref = match self.cost.reference_current {
            ReferenceCurrent::Static => u_static,
            ReferenceCurrent::Zero => DVector::zeros(model.joints()),
        };
        Ok((x0, u_ref))
    }

    /// Complete problem for one actuator variant.
    pub fn problem(&self, variant: ActuatorVariant) -> Result<SlpProblem> {
        let model = self.model(variant)?;
        let plant = self.plant.build()?;
        let (x_init, u_ref) = self.initial_state(&model, plant.as_ref())?;
        let c = &self.constraints;
        let z_fin = match &c.final_q_rad {
            Some(q) => Some(plant.length_from_joint(&DVector::from_column_slice(q))?),
            None => None,
        };
        let constraints = ConstraintSet {
            delta_bar: c.delta_bar_m,
            z_min: c.z_min_m.clone(),
            z_max: c.z_max_m.clone(),
            ydot_bar: c.ydot_bar_m_per_s,
            u_bar: c.u_bar_a,
            trust_radius: c.trust_radius_m,
            x_init,
            z_fin,
            zero_final_com_x_velocity: c.zero_final_com_x_velocity,
        };
        let cost = CostSpec {
            objective: self.cost.objective,
            alpha: self.cost.alpha,
            gamma: self.cost.gamma,
            sigma: self.cost.sigma,
            u_baseline: vec![u_ref; self.slp.steps.saturating_sub(1)],
        };
        let problem = SlpProblem {
            model,
            plant,
            contact: self.contact_model(),
            constraints,
            cost,
            config: self.slp_config(),
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Test input for the pseudo-mass sweep: holding current plus a chirp.
    pub fn tune_input(&self) -> Result<TestInput> {
        let t = self
            .tune
            .as_ref()
            .ok_or_else(|| Error::Scenario(format!("scenario '{}' has no [tune] section", self.name)))?;
        let model = self.model(ActuatorVariant::Compliant)?;
        let plant = self.plant.build()?;
        let (x0, u0) = self.initial_state(&model, plant.as_ref())?;
        let u = chirp_input(&u0, t.chirp_amplitude_a, t.chirp_start_hz, t.chirp_end_hz, self.slp.dt_s, self.slp.steps);
        Ok(TestInput {
            x0,
            u,
            dt: self.slp.dt_s,
            substeps: t.substeps,
        })
    }
}
