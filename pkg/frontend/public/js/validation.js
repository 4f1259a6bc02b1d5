// Client-side mirror of the create-task preconditions.
//
// The server stays the authority (it re-validates everything); this module
// only decides whether the compose form is allowed to fire a request, so a
// hopeless description never leaves the browser.
export const EVENT_CLASSES = [
    { id: 0, label: "fire" },
    { id: 1, label: "flood" },
    { id: 2, label: "damaged_infrastructure" },
    { id: 3, label: "normal" },
];
export const NORMAL_CLASS_ID = 3;
export function classLabel(id) {
    const entry = EVENT_CLASSES.find((c) => c.id === id);
    return entry ? entry.label : `class ${id}`;
}
export function emptyForm() {
    return {
        name: "",
        mode: "ONLINE",
        layers: [{ kind: "TIME", threshold: 300 }],
        openedAt: null,
        deadline: null,
        expectedClass: null,
    };
}
export function validateTaskForm(form, nowSeconds) {
    const now = nowSeconds ?? Date.now() / 1000;
    const problems = [];
    if (form.layers.length === 0) {
        problems.push("at least one constraint layer is required");
    }
    const seen = new Set();
    form.layers.forEach((layer, i) => {
        if (seen.has(layer.kind)) {
            problems.push(`duplicate layer kind: ${layer.kind}`);
            return;
        }
        seen.add(layer.kind);
        const t = layer.threshold;
        if (t === null || !Number.isFinite(t) || t <= 0) {
            problems.push(`layer ${i} (${layer.kind}): threshold must be a positive number`);
        }
        else if (layer.kind === "VISUAL" && !Number.isInteger(t)) {
            problems.push(`layer ${i} (VISUAL): match count threshold must be an integer`);
        }
    });
    if (form.openedAt === null)
        problems.push("opened_at is required");
    if (form.deadline === null)
        problems.push("deadline is required");
    if (form.openedAt !== null && form.deadline !== null && form.deadline <= form.openedAt) {
        problems.push("deadline must be after opened_at");
    }
    if (form.deadline !== null && form.deadline <= now) {
        problems.push("deadline is in the past");
    }
    if (form.mode === "ONLINE") {
        if (form.expectedClass === null) {
            problems.push("ONLINE tasks need an expected class");
        }
        else if (form.expectedClass === NORMAL_CLASS_ID) {
            problems.push("expected class must not be the normal class");
        }
    }
    return problems;
}
export function formReady(form, nowSeconds) {
    return validateTaskForm(form, nowSeconds).length === 0;
}
// POST /tasks body. OFFLINE drops the expected class: the vote at close
// determines it, and sending one only earns a server warning.
export function toCreateRequest(form) {
    const body = {
        name: form.name,
        mode: form.mode,
        layers: form.layers.map((l) => ({ kind: l.kind, threshold: l.threshold })),
        opened_at: form.openedAt,
        deadline: form.deadline,
    };
    if (form.mode === "ONLINE")
        body.expected_class = form.expectedClass;
    return body;
}
