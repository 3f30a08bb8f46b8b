use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AggregativeGame, PlayerType, PlayerUtility, TableGrid};
use crate::error::{Error, Result};

/// Utility parameters for every player, one variant per evaluator kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum UtilitySpec {
    Linear { constant: Vec<Vec<f64>>, weights: Vec<Vec<Vec<f64>>> },
    Table { grid: TableGrid, values: Vec<Vec<Vec<f64>>> },
    Market { lambda: f64, valuations: Vec<Vec<f64>> },
    Threshold { thresholds: Vec<f64>, slopes: Vec<f64> },
}

/// On-disk game description. Floats are written in shortest round-trip form
/// so a load/save cycle is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub gamma: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// `f[i][k][j]`
    pub f: Vec<Vec<Vec<f64>>>,
    pub utility: UtilitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<Vec<Vec<f64>>>,
}

fn per_player<T>(v: Vec<T>, n: usize, what: &str) -> Result<Vec<T>> {
    if v.len() != n {
        return Err(Error::invalid(format!("{what}: {} entries for {n} players", v.len())));
    }
    Ok(v)
}

impl GameFile {
    pub fn into_game(self) -> Result<AggregativeGame> {
        let n = self.n;
        let f = per_player(self.f, n, "influence")?;
        let utilities: Vec<PlayerUtility> = match self.utility {
            UtilitySpec::Linear { constant, weights } => per_player(constant, n, "constants")?
                .into_iter()
                .zip(per_player(weights, n, "weights")?)
                .map(|(constant, weights)| PlayerUtility::Linear { constant, weights })
                .collect(),
            UtilitySpec::Table { grid, values } => per_player(values, n, "table values")?
                .into_iter()
                .map(|values| PlayerUtility::Table { grid, values })
                .collect(),
            UtilitySpec::Market { lambda, valuations } => per_player(valuations, n, "valuations")?
                .into_iter()
                .map(|valuation| PlayerUtility::Market { valuation, lambda })
                .collect(),
            UtilitySpec::Threshold { thresholds, slopes } => per_player(thresholds, n, "thresholds")?
                .into_iter()
                .zip(per_player(slopes, n, "slopes")?)
                .map(|(threshold, slope)| PlayerUtility::Threshold { threshold, slope })
                .collect(),
        };
        let losses: Vec<Option<Vec<f64>>> = match self.loss {
            Some(l) => per_player(l, n, "loss")?.into_iter().map(Some).collect(),
            None => vec![None; n],
        };
        let players: Vec<PlayerType> = utilities
            .into_iter()
            .zip(f)
            .zip(losses)
            .map(|((utility, influence), loss)| PlayerType { utility, influence, loss })
            .collect();
        let game = AggregativeGame::new(self.gamma, self.w, players)?;
        if game.m() != self.m || game.d() != self.d {
            return Err(Error::invalid(format!(
                "declared m = {}, d = {} but tables give m = {}, d = {}",
                self.m,
                self.d,
                game.m(),
                game.d()
            )));
        }
        Ok(game)
    }

    /// Fails if players use different utility kinds (or table grids, or
    /// market slopes), which the file format cannot express.
    pub fn from_game(game: &AggregativeGame) -> Result<Self> {
        let players = game.players();
        let mixed = || Error::param("game file needs one utility kind shared by all players");
        let utility = match &players[0].utility {
            PlayerUtility::Linear { .. } => {
                let mut constant = Vec::new();
                let mut weights = Vec::new();
                for p in players {
                    match &p.utility {
                        PlayerUtility::Linear { constant: c, weights: w } => {
                            constant.push(c.clone());
                            weights.push(w.clone());
                        }
                        _ => return Err(mixed()),
                    }
                }
                UtilitySpec::Linear { constant, weights }
            }
            PlayerUtility::Table { grid, .. } => {
                let mut values = Vec::new();
                for p in players {
                    match &p.utility {
                        PlayerUtility::Table { grid: g, values: v } if g == grid => values.push(v.clone()),
                        _ => return Err(mixed()),
                    }
                }
                UtilitySpec::Table { grid: *grid, values }
            }
            PlayerUtility::Market { lambda, .. } => {
                let mut valuations = Vec::new();
                for p in players {
                    match &p.utility {
                        PlayerUtility::Market { valuation, lambda: l } if l == lambda => {
                            valuations.push(valuation.clone())
                        }
                        _ => return Err(mixed()),
                    }
                }
                UtilitySpec::Market { lambda: *lambda, valuations }
            }
            PlayerUtility::Threshold { .. } => {
                let mut thresholds = Vec::new();
                let mut slopes = Vec::new();
                for p in players {
                    match &p.utility {
                        PlayerUtility::Threshold { threshold, slope } => {
                            thresholds.push(*threshold);
                            slopes.push(*slope);
                        }
                        _ => return Err(mixed()),
                    }
                }
                UtilitySpec::Threshold { thresholds, slopes }
            }
        };
        let loss = if game.has_loss() {
            Some(players.iter().map(|p| p.loss.clone().unwrap_or_default()).collect())
        } else {
            None
        };
        Ok(GameFile {
            n: game.n(),
            m: game.m(),
            d: game.d(),
            gamma: game.gamma(),
            w: game.w(),
            f: players.iter().map(|p| p.influence.clone()).collect(),
            utility,
            loss,
        })
    }
}

impl AggregativeGame {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GameFile::from_game(self)?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GameFile>(text)?.into_game()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}
