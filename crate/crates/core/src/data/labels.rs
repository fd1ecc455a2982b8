use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four-valued nutritional status derived from BMI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NutritionClass {
    Severe = 0,
    Moderate = 1,
    Normal = 2,
    Overnutrition = 3,
}

impl NutritionClass {
    pub const ALL: [NutritionClass; 4] = [
        NutritionClass::Severe,
        NutritionClass::Moderate,
        NutritionClass::Normal,
        NutritionClass::Overnutrition,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NutritionClass::Severe => "severe malnutrition",
            NutritionClass::Moderate => "moderate malnutrition",
            NutritionClass::Normal => "normal",
            NutritionClass::Overnutrition => "overnutrition",
        }
    }
}

/// Class boundaries in kg/m². Defaults follow the WHO severe-thinness,
/// normal and overweight boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmiCutoffs {
    pub severe: f64,
    pub normal_low: f64,
    pub over: f64,
}

impl Default for BmiCutoffs {
    fn default() -> Self {
        Self {
            severe: 16.0,
            normal_low: 18.5,
            over: 25.0,
        }
    }
}

impl BmiCutoffs {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.severe, self.normal_low, self.over]
            .iter()
            .all(|v| v.is_finite())
            && self.severe < self.normal_low
            && self.normal_low < self.over;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "BMI cutoffs must be finite and strictly increasing, got {self:?}"
            )))
        }
    }
}

/// Plausible range for BMI×100; survey sentinels (9998, 9999) fall outside.
pub const BMI_CENTI_RANGE: (i64, i64) = (1000, 6000);

pub fn label_bmi(bmi_centi: i64, cutoffs: &BmiCutoffs) -> Result<NutritionClass> {
    let (lo, hi) = BMI_CENTI_RANGE;
    if !(lo..=hi).contains(&bmi_centi) {
        return Err(Error::Data(format!(
            "BMI value {bmi_centi} outside plausible range [{lo}, {hi}]"
        )));
    }
    // Compare in centi units so 1850 meets an 18.5 cutoff exactly.
    let v = bmi_centi as f64;
    Ok(if v < cutoffs.severe * 100.0 {
        NutritionClass::Severe
    } else if v < cutoffs.normal_low * 100.0 {
        NutritionClass::Moderate
    } else if v < cutoffs.over * 100.0 {
        NutritionClass::Normal
    } else {
        NutritionClass::Overnutrition
    })
}
