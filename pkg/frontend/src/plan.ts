/** Topological layering of a plan graph for the DAG view. */

import type { PlanDocument } from "./types.js";

/**
 * Group subtask ids into dependency-depth columns: layer 0 holds nodes with
 * no deps, and every node sits one layer after its deepest dependency.
 * Within a layer, ids are sorted. Throws on unknown deps or cycles.
 */
export function topologicalLayers(plan: PlanDocument): string[][] {
  const known = new Set(plan.subtasks.map((n) => n.id));
  for (const node of plan.subtasks) {
    for (const dep of node.deps) {
      if (!known.has(dep)) {
        throw new Error(`unknown dep ${dep} of ${node.id}`);
      }
    }
  }
  const depth = new Map<string, number>();
  const visiting = new Set<string>();
  const byId = new Map(plan.subtasks.map((n) => [n.id, n]));

  const resolve = (id: string): number => {
    const cached = depth.get(id);
    if (cached !== undefined) return cached;
    if (visiting.has(id)) {
      throw new Error(`cycle involving ${id}`);
    }
    visiting.add(id);
    const node = byId.get(id)!;
    let d = 0;
    for (const dep of node.deps) {
      d = Math.max(d, resolve(dep) + 1);
    }
    visiting.delete(id);
    depth.set(id, d);
    return d;
  };

  const layers: string[][] = [];
  for (const node of plan.subtasks) {
    const d = resolve(node.id);
    while (layers.length <= d) layers.push([]);
    layers[d].push(node.id);
  }
  for (const layer of layers) layer.sort();
  return layers;
}
