//! Routing on the uni-directional torus: every core has one +x and one +y
//! output link; messages travel all x hops first, then all y hops.

/// Output link of a core: dimension 0 is +x, dimension 1 is +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub core: (u32, u32),
    pub dim: u8,
}

/// The ordered links a message crosses from `from` to `to`.
pub fn route(width: u32, height: u32, from: (u32, u32), to: (u32, u32)) -> Vec<Link> {
    let dx = (to.0 + width - from.0) % width;
    let dy = (to.1 + height - from.1) % height;
    let mut links = Vec::with_capacity((dx + dy) as usize);
    for i in 0..dx {
        links.push(Link {
            core: ((from.0 + i) % width, from.1),
            dim: 0,
        });
    }
    for j in 0..dy {
        links.push(Link {
            core: (to.0, (from.1 + j) % height),
            dim: 1,
        });
    }
    links
}

pub fn hops(width: u32, height: u32, from: (u32, u32), to: (u32, u32)) -> u32 {
    ((to.0 + width - from.0) % width) + ((to.1 + height - from.1) % height)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_around() {
        assert_eq!(hops(4, 4, (3, 3), (0, 0)), 2);
        let links = route(4, 4, (3, 3), (1, 0));
        assert_eq!(links.len(), 3);
        assert_eq!(links[0], Link { core: (3, 3), dim: 0 });
        assert_eq!(links[1], Link { core: (0, 3), dim: 0 });
        assert_eq!(links[2], Link { core: (1, 3), dim: 1 });
    }

    #[test]
    fn x_before_y() {
        let links = route(8, 8, (1, 1), (3, 4));
        assert!(links[..2].iter().all(|l| l.dim == 0));
        assert!(links[2..].iter().all(|l| l.dim == 1));
        assert_eq!(links.len(), 5);
    }
}
