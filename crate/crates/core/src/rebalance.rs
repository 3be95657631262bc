//! Relocation of idle vehicles toward origins of unserved requests.

use rayon::prelude::*;

use crate::model::{Request, VehicleId, VehicleState};
use crate::network::{Network, NodeId};
use crate::optim::transportation_solve;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RebalancePlan {
    pub moves: Vec<(VehicleId, NodeId)>,
    /// Total deadhead seconds of the chosen moves.
    pub objective: f64,
}

/// Pairs idle vehicles with unserved request origins minimising total
/// travel time; as many pairs as the smaller side.
pub fn rebalance(net: &Network, idle: &[&VehicleState], unserved: &[&Request]) -> RebalancePlan {
    if idle.is_empty() || unserved.is_empty() {
        return RebalancePlan::default();
    }
    let cost: Vec<Vec<f64>> = idle
        .par_iter()
        .map(|v| unserved.iter().map(|r| net.time(v.node, r.origin)).collect())
        .collect();
    let (pairs, _) = transportation_solve(&cost);
    let mut plan = RebalancePlan::default();
    for (i, j) in pairs {
        plan.objective += cost[i][j];
        plan.moves.push((idle[i].id, unserved[j].origin));
    }
    plan.moves.sort();
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RequestId;

    fn req(id: u32, origin: u32) -> Request {
        Request {
            id: RequestId(id),
            origin: NodeId(origin),
            destination: NodeId(0),
            emergence: 0.0,
            max_wait: 300.0,
            max_detour: 600.0,
        }
    }

    #[test]
    fn nothing_to_do() {
        let net = Network::grid(1, 4, 1.0, 1.0);
        assert_eq!(rebalance(&net, &[], &[&req(1, 2)]), RebalancePlan::default());
    }

    #[test]
    fn nearest_origin_wins() {
        // line 0-1-...-9, vehicle at 0, origins 3 s and 8 s away
        let net = Network::grid(1, 10, 1.0, 1.0);
        let v = VehicleState::new(VehicleId(1), NodeId(0), 4);
        let (a, b) = (req(1, 3), req(2, 8));
        let plan = rebalance(&net, &[&v], &[&b, &a]);
        assert_eq!(plan.moves, vec![(VehicleId(1), NodeId(3))]);
        assert_eq!(plan.objective, 3.0);
    }

    #[test]
    fn crossed_costs_pair_optimally() {
        let net = Network::grid(1, 10, 1.0, 1.0);
        let v1 = VehicleState::new(VehicleId(1), NodeId(0), 4);
        let v2 = VehicleState::new(VehicleId(2), NodeId(9), 4);
        let plan = rebalance(&net, &[&v1, &v2], &[&req(1, 8), &req(2, 1)]);
        assert_eq!(plan.moves, vec![(VehicleId(1), NodeId(1)), (VehicleId(2), NodeId(8))]);
        assert_eq!(plan.objective, 2.0);
    }
}
