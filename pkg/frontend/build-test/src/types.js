// Wire payload shapes for /api/v1 (numbers arrive as flat JSON lists).
export {};
