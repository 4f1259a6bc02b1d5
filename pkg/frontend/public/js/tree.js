// Collapsible outline over the grouping-tree snapshot.
//
// The dashboard never regroups anything: every node the service reported
// becomes exactly one DOM node, and collapsing only hides a subtree with
// CSS. That keeps "rendered nodes == snapshot nodes" a structural fact
// rather than something to re-check after every toggle.
export function isGroup(node) {
    return "members" in node;
}
export function countNodes(snapshot) {
    let n = 0;
    const walk = (node) => {
        n += 1;
        if (!isGroup(node))
            node.children.forEach(walk);
    };
    walk(snapshot.root);
    return n;
}
// Which member to highlight while the task is live. This follows the
// task's representative policy over the member list exactly as served;
// the authoritative pick arrives in the close report.
export function representativeIndex(members, policy) {
    return policy === "FIRST" ? 0 : members.length - 1;
}
export function layerLabel(node, kinds) {
    if (isGroup(node))
        return "group";
    if (node.layer_index === 0)
        return "root";
    return kinds[node.layer_index - 1] ?? `layer ${node.layer_index}`;
}
// `collapsed` holds the path keys ("0", "0.1", ...) the user folded; the
// caller owns the set so expansion survives re-renders during polling.
export function renderTree(snapshot, policy, layerKinds, collapsed) {
    let nodeCount = 0;
    const renderNode = (node, path) => {
        nodeCount += 1;
        const item = document.createElement("li");
        item.className = "tree-node";
        item.dataset.path = path;
        const row = document.createElement("div");
        row.className = "tree-row";
        item.append(row);
        if (isGroup(node)) {
            item.classList.add("tree-group");
            const label = document.createElement("span");
            label.className = "tree-label";
            label.textContent = `group (${node.members.length})`;
            row.append(label);
            const repIndex = representativeIndex(node.members, policy);
            node.members.forEach((member, i) => {
                const chip = document.createElement("span");
                chip.className = "member";
                chip.textContent = member;
                if (i === repIndex) {
                    chip.classList.add("rep");
                    chip.title = `representative (${policy})`;
                }
                row.append(chip);
            });
            return item;
        }
        const toggle = document.createElement("button");
        toggle.type = "button";
        toggle.className = "tree-toggle";
        toggle.addEventListener("click", () => {
            if (collapsed.has(path))
                collapsed.delete(path);
            else
                collapsed.add(path);
            item.classList.toggle("collapsed", collapsed.has(path));
            toggle.textContent = collapsed.has(path) ? "+" : "−";
        });
        row.append(toggle);
        const label = document.createElement("span");
        label.className = "tree-label";
        const anchor = node.anchor === null ? "" : ` · anchor ${node.anchor}`;
        label.textContent = layerLabel(node, layerKinds) + anchor;
        row.append(label);
        const children = document.createElement("ul");
        children.className = "tree-children";
        node.children.forEach((child, i) => {
            children.append(renderNode(child, `${path}.${i}`));
        });
        item.append(children);
        const isCollapsed = collapsed.has(path);
        item.classList.toggle("collapsed", isCollapsed);
        toggle.textContent = isCollapsed ? "+" : "−";
        return item;
    };
    const root = document.createElement("ul");
    root.className = "tree-root";
    root.append(renderNode(snapshot.root, "0"));
    return { element: root, nodeCount };
}
