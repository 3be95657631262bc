//! Small hand-checkable instances shared by tests, examples and `validate`.

use std::collections::BTreeSet;

use crate::model::{plan_route, Request, RequestId, Stop, VehicleId, VehicleState};
use crate::network::{Network, NodeId};

pub const FIG_V: NodeId = NodeId(0);
pub const FIG_1D: NodeId = NodeId(10);
pub const FIG_2D: NodeId = NodeId(20);
pub const FIG_3O: NodeId = NodeId(30);
pub const FIG_3D: NodeId = NodeId(31);

/// Unit-speed Euclidean plane with the five figure points.
pub fn figure_network() -> Network {
    Network::euclidean(&[
        (FIG_V, 0.0, 0.0),
        (FIG_1D, 6.0, 8.0),
        (FIG_2D, 0.0, 6.0),
        (FIG_3O, 6.0, 3.0),
        (FIG_3D, 3.0, 4.0),
    ])
    .expect("figure points are distinct")
}

/// Vehicle at the origin carrying requests 1 and 2, both due by time 20,
/// with committed route 2D then 1D.
pub fn figure_vehicle(net: &Network) -> VehicleState {
    let mut v = VehicleState::new(VehicleId(1), FIG_V, 4);
    v.onboard = BTreeSet::from([RequestId(1), RequestId(2)]);
    let stops = vec![
        Stop::onboard_dropoff(RequestId(2), FIG_2D, 20.0),
        Stop::onboard_dropoff(RequestId(1), FIG_1D, 20.0),
    ];
    v.route = plan_route(net, v.start(0.0), stops).expect("committed route is feasible");
    v
}

/// Request 3: boards by time 10 and must be dropped by time 20 when picked
/// up on the direct leg from the vehicle start.
pub fn figure_request(net: &Network) -> Request {
    let direct = net.time(FIG_3O, FIG_3D);
    let to_origin = net.time(FIG_V, FIG_3O);
    Request {
        id: RequestId(3),
        origin: FIG_3O,
        destination: FIG_3D,
        emergence: 0.0,
        max_wait: 10.0,
        max_detour: 20.0 - to_origin - direct,
    }
}

/// The figure vehicle re-planned at 3O just after boarding request 3.
pub fn figure_vehicle_at_pickup(net: &Network) -> VehicleState {
    let mut v = VehicleState::new(VehicleId(1), FIG_3O, 4);
    v.ready_at = net.time(FIG_V, FIG_3O);
    v.onboard = BTreeSet::from([RequestId(1), RequestId(2), RequestId(3)]);
    let stops = vec![
        Stop::onboard_dropoff(RequestId(3), FIG_3D, 20.0),
        Stop::onboard_dropoff(RequestId(2), FIG_2D, 20.0),
        Stop::onboard_dropoff(RequestId(1), FIG_1D, 20.0),
    ];
    v.route = plan_route(net, v.start(v.ready_at), stops).expect("feasible");
    v
}
